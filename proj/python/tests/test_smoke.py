import math

import pytest

import ccepe


def test_revenue_curve():
    R, phi = ccepe.revenue_curve([3, 2, 1])
    assert R == [3, 4, 4]
    assert phi == [3, 1, 0]
    with pytest.raises(ccepe.InputError):
        ccepe.revenue_curve([1, 2])


def test_benchmarks():
    assert ccepe.efo([3, 2, 1]) == pytest.approx(4)
    assert ccepe.efo([3, 2, 1], {"kind": "k_unit", "k": 1}) == pytest.approx(3)
    assert ccepe.efo_benchmark2([10, 1], {"kind": "k_unit", "k": 1}) == pytest.approx(1)
    assert ccepe.ef_payments([1, 1, 0], [3, 2, 1]) == [2, 2, 0]


def test_consensus():
    assert ccepe.consensus_round(0.0, 5.0, 2.0) == pytest.approx(4)
    params = ccepe.ConsensusParams(c=2, alpha=2, m=1)
    est = ccepe.build_estimated_profile(0.0, [4, 4, 1, 1], params)
    assert est["values"] == [4, 4, 0, 0]
    assert est["R"] == [4, 8, 8, 8]
    cc = ccepe.cross_checked_estimate(0.0, [4, 4, 1], params)
    assert cc["agents"] == [2]


def test_params():
    cor = ccepe.ConsensusParams.tuned()
    assert cor.m_prime() == 19
    assert cor.beta() <= 30.4
    with pytest.raises(ccepe.InputError):
        ccepe.ConsensusParams(c=0.5)


def test_mechanisms():
    out = ccepe.pe_outcome([2, 2], [3, 2])
    assert out["p"] == pytest.approx([2, 2])
    assert ccepe.pseudo_vickrey([3, 2])["revenue"] == pytest.approx(2)
    one_slot = {"kind": "explicit", "n": 3, "maximal_sets": [[0]], "permuted": True}
    assert ccepe.pseudo_vickrey([3, 2, 1], one_slot)["revenue"] == pytest.approx(2 / 3)

    params = ccepe.ConsensusParams(c=2, alpha=2, m=1, p=0.5)
    mixed = ccepe.ccepe([5, 4, 4, 1], params, 0.3)
    vic = ccepe.pseudo_vickrey([5, 4, 4, 1])["revenue"]
    params.p = 0.0
    prime = ccepe.ccepe([5, 4, 4, 1], params, 0.3)["revenue"]
    assert mixed["revenue"] == pytest.approx(0.5 * vic + 0.5 * prime)


def test_expected_revenue_and_runs():
    params = ccepe.ConsensusParams(c=2, alpha=2, m=1, p=0.5)
    bids = [6, 5, 5, 2, 1]
    exact, hw = ccepe.expected_revenue("ccepe", bids, params)
    assert hw == 0
    mc, mc_hw = ccepe.expected_revenue("ccepe", bids, params, mc_trials=4000, seed=7)
    assert mc_hw > 0
    assert abs(mc - exact) <= 4 * mc_hw
    run = ccepe.run_ccepe(bids, params, 0.25, tie_seed=1, perm_seed=2, mix_seed=3)
    assert run["arm"] in ("vickrey", "ccepe_prime")
    assert math.isclose(run["revenue"], sum(run["p"]))
    with pytest.raises(ccepe.ConfigError):
        ccepe.expected_revenue("vcg", bids, params)


def test_verify_suite():
    passed, checks, violations = ccepe.verify_suite("pe")
    assert passed and checks > 0 and violations == 0
    with pytest.raises(ccepe.ConfigError):
        ccepe.verify_suite("nosuch")
