"""Python bindings for the ccepe C++ core.

Environments are passed as dicts (or JSON strings) in the same schema the CLI
reads, e.g. ``{"kind": "k_unit", "k": 2, "permuted": False}``.
"""

import json as _json

from . import _ccepe
from ._ccepe import (
    CapacityError,
    ConfigError,
    ConsensusParams,
    InputError,
    build_estimated_profile,
    consensus_round,
    cross_checked_estimate,
    ef_payments,
    revenue_curve,
    verify_suite,
)

__all__ = [
    "CapacityError",
    "ConfigError",
    "ConsensusParams",
    "InputError",
    "build_estimated_profile",
    "ccepe",
    "consensus_round",
    "cross_checked_estimate",
    "ef_payments",
    "efo",
    "efo_benchmark2",
    "expected_revenue",
    "pe_outcome",
    "pseudo_vickrey",
    "revenue_curve",
    "run_ccepe",
    "verify_suite",
]

DIGITAL_GOODS = {"kind": "digital_goods"}


def _env(env):
    return env if isinstance(env, str) else _json.dumps(env)


def efo(values, env=DIGITAL_GOODS):
    return _ccepe.efo(values, _env(env))


def efo_benchmark2(values, env=DIGITAL_GOODS):
    return _ccepe.efo_benchmark2(values, _env(env))


def pe_outcome(target, bids, env=DIGITAL_GOODS):
    return _ccepe.pe_outcome(target, bids, _env(env))


def pseudo_vickrey(bids, env=DIGITAL_GOODS):
    return _ccepe.pseudo_vickrey(bids, _env(env))


def ccepe(bids, params, sigma, env=DIGITAL_GOODS):
    return _ccepe.ccepe(bids, _env(env), params, sigma)


def run_ccepe(bids, params, sigma, env=DIGITAL_GOODS, tie_seed=0, perm_seed=0, mix_seed=0):
    return _json.loads(_ccepe.run_ccepe(bids, _env(env), params, sigma, tie_seed, perm_seed, mix_seed))


def expected_revenue(kind, bids, params, env=DIGITAL_GOODS, mc_trials=0, seed=0):
    """Return (value, half_width). ``mc_trials=0`` integrates sigma exactly."""
    return _ccepe.expected_revenue(kind, bids, _env(env), params, mc_trials, seed)
