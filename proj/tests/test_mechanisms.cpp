#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "ccepe/io.hpp"
#include "ccepe/mechanisms.hpp"
#include "ccepe/rng.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace ccepe;
using testutil::near;
using testutil::near_all;

namespace {

const ConsensusParams kSmall{2, 2, 1, 0.5};

Environment one_slot(int n, bool permuted = true) {
  return Environment(ExplicitMixture{{{1.0, SetSystemRealization::from_maximal_sets(n, {{0}})}}}, permuted);
}

Values deviations(const Values& bids) {
  std::set<double> pts{0.0};
  for (double b : bids) pts.insert(b);
  Values grid(pts.begin(), pts.end());
  const std::size_t k = grid.size();
  for (std::size_t i = 0; i + 1 < k; ++i) grid.push_back(0.5 * (grid[i] + grid[i + 1]));
  grid.push_back(2.0 * grid[k - 1] + 1.0);
  return grid;
}

}  // namespace

TEST_CASE("mechanism names") {
  CHECK(parse_mechanism("ccepe") == MechanismKind::ccepe);
  CHECK(parse_mechanism("pseudo_vickrey") == MechanismKind::pseudo_vickrey);
  CHECK(to_string(MechanismKind::ccepe_prime) == "ccepe_prime");
  CHECK(to_string(Arm::vickrey) == "vickrey");
  CHECK_THROWS_AS(parse_mechanism("vcg"), ConfigError);
}

TEST_CASE("pseudo_vickrey examples") {
  CHECK(pseudo_vickrey(Values{3, 2}, Environment::digital_goods(2)).revenue == 2);
  const Environment empty(ExplicitMixture{{{1.0, SetSystemRealization::from_maximal_sets(2, {})}}});
  CHECK(pseudo_vickrey(Values{3, 2}, empty).revenue == 0);
  CHECK(near(pseudo_vickrey(Values{3, 2, 1}, one_slot(3)).revenue, 2.0 / 3.0));
  // Unsorted bids: the top bidder is served wherever it sits.
  const auto o = pseudo_vickrey(Values{1, 3, 2}, Environment::digital_goods(3));
  CHECK(o.x == Values{0, 1, 0});
  CHECK(o.p == Values{0, 2, 0});
  // Tied tops split the service probability and pay the tied value.
  const auto tie = pseudo_vickrey(Values{3, 3, 1}, Environment::digital_goods(3));
  CHECK(near_all(tie.x, {0.5, 0.5, 0}));
  CHECK(near(tie.revenue, 3));
  CHECK_THROWS_AS(pseudo_vickrey(Values{3}, Environment::digital_goods(1)), InputError);
}

TEST_CASE("pseudo_vickrey matches the slot oracle") {
  testutil::Gen g(41);
  for (int t = 0; t < 200; ++t) {
    const int n = g.integer(2, 6);
    const auto oenv = g.env(n);
    auto v = g.profile(n);
    std::shuffle(v.begin(), v.end(), g.eng);
    CHECK(near(pseudo_vickrey(v, oenv.library()).revenue, oracle::vickrey_revenue(v, oenv)));
  }
}

TEST_CASE("pseudo_vickrey covers the top envy-free payment of the truncated profile") {
  testutil::Gen g(42);
  for (int t = 0; t < 300; ++t) {
    const int n = g.integer(2, 6);
    const auto oenv = g.env(n);
    const auto v = g.profile(n);
    const auto v2 = oracle::truncate(v, 2);
    const auto ef = oracle::ef_payments(oracle::efo(v2, oenv).x, v2);
    CHECK(pseudo_vickrey(v, oenv.library()).revenue >= ef[0] - 1e-9);
  }
}

TEST_CASE("ccepe_prime examples") {
  SUBCASE("only the low agent is cross-checked") {
    const auto res = ccepe_prime(Values{4, 4, 1}, Environment::digital_goods(3), kSmall, 0);
    REQUIRE(res.diagnostics);
    CHECK(res.diagnostics->agents == Subset{2});
    CHECK(res.diagnostics->estimate.values == Values{4, 0, 0});
    CHECK(res.outcome.revenue == 0);
    CHECK(res.arm == Arm::ccepe_prime);
  }
  SUBCASE("everyone cross-checked reproduces the extractor") {
    const Values v(16, 1.0);
    const auto env = Environment::digital_goods(16);
    const auto res = ccepe_prime(v, env, kSmall, 0);
    REQUIRE(res.diagnostics->agents.size() == 16);
    const auto pe = pe_outcome(res.diagnostics->estimate.values, v, env);
    CHECK(near_all(res.outcome.x, pe.x));
    CHECK(near_all(res.outcome.p, pe.p));
  }
  SUBCASE("nobody cross-checked") {
    const auto res = ccepe_prime(Values{2, 1, 1, 0}, Environment::digital_goods(4), kSmall, 0);
    CHECK(res.diagnostics->agents.empty());
    CHECK(res.diagnostics->estimate.values == Values(4, 0.0));
    CHECK(res.outcome.revenue == 0);
    CHECK(res.outcome.x == Values(4, 0.0));
  }
}

TEST_CASE("ccepe is the p-mixture of its arms") {
  testutil::Gen g(43);
  for (int t = 0; t < 100; ++t) {
    const int n = g.integer(3, 6);
    const auto env = g.env(n).library();
    auto v = g.profile(n);
    std::shuffle(v.begin(), v.end(), g.eng);
    ConsensusParams p{g.real(1.2, 3), g.real(1.2, 3), g.integer(1, 2), g.real(0, 1)};
    const double sigma = g.real(0, 1);
    const auto vic = pseudo_vickrey(v, env);
    const auto cp = ccepe_prime(v, env, p, sigma);
    const auto mix = ccepe::ccepe(v, env, p, sigma);
    CHECK(near(mix.outcome.revenue, p.p * vic.revenue + (1 - p.p) * cp.outcome.revenue));
    CHECK_FALSE(mix.arm.has_value());
    p.p = 1;
    CHECK(near_all(ccepe::ccepe(v, env, p, sigma).outcome.p, vic.p));
    p.p = 0;
    CHECK(near_all(ccepe::ccepe(v, env, p, sigma).outcome.p, cp.outcome.p));
  }
}

TEST_CASE("fixed-sigma mechanisms are truthful") {
  testutil::Gen g(44);
  for (int t = 0; t < 60; ++t) {
    const int n = g.integer(3, 5);
    const auto env = g.env(n).library();
    auto v = g.profile(n);
    std::shuffle(v.begin(), v.end(), g.eng);
    const ConsensusParams p{g.real(1.2, 3), g.real(1.2, 3), 1, g.real(0, 1)};
    const double sigma = g.real(0, 1);
    for (bool mixed : {false, true}) {
      auto run = [&](const Values& b) {
        return mixed ? ccepe::ccepe(b, env, p, sigma) : ccepe_prime(b, env, p, sigma);
      };
      const auto truth = run(v).outcome;
      for (int i = 0; i < n; ++i) {
        const double u = v[i] * truth.x[i] - truth.p[i];
        for (double z : deviations(v)) {
          auto b = v;
          b[i] = z;
          const auto o = run(b).outcome;
          CHECK(u >= v[i] * o.x[i] - o.p[i] - 1e-9);
        }
      }
    }
  }
}

TEST_CASE("exact expected revenue of the cross-checked extractor matches the oracle") {
  testutil::Gen g(45);
  for (int t = 0; t < 60; ++t) {
    const int n = g.integer(3, 6);
    const auto oenv = g.env(n);
    auto v = g.profile(n);
    std::shuffle(v.begin(), v.end(), g.eng);
    const ConsensusParams p{g.real(1.2, 3), g.real(1.2, 3), g.integer(1, 2), 0.5};
    const auto est = expected_revenue(MechanismKind::ccepe_prime, v, oenv.library(), p);
    CHECK(est.half_width == 0);
    CHECK(near(est.value, oracle::ccepe_prime_revenue(v, oenv, p.c, p.alpha, p.m)));
    const auto mixed = expected_revenue(MechanismKind::ccepe, v, oenv.library(), p);
    CHECK(near(mixed.value, p.p * oracle::vickrey_revenue(v, oenv) + (1 - p.p) * est.value));
    CHECK(near(mixed.vickrey_share, p.p));
  }
}

TEST_CASE("monte carlo expected revenue") {
  SUBCASE("deterministic mechanism has zero half-width") {
    const auto est = expected_revenue(MechanismKind::pseudo_vickrey, Values{3, 2, 1}, Environment::digital_goods(3),
                                      kSmall, MonteCarlo{500, 3});
    CHECK(est.value == 2);
    CHECK(est.half_width == 0);
  }
  SUBCASE("agrees with exact within the half-width on most instances") {
    testutil::Gen g(46);
    int inside = 0;
    const int cases = 40;
    for (int t = 0; t < cases; ++t) {
      const int n = g.integer(3, 6);
      const auto env = g.env(n).library();
      const auto v = g.profile(n);
      const auto p = ConsensusParams{g.real(1.2, 3), g.real(1.2, 3), 1, 0.5};
      const auto exact = expected_revenue(MechanismKind::ccepe, v, env, p);
      const auto mc = expected_revenue(MechanismKind::ccepe, v, env, p, MonteCarlo{2000, std::uint64_t(t)});
      CHECK(mc.trials == 2000);
      inside += std::abs(mc.value - exact.value) <= mc.half_width + 1e-12;
    }
    CHECK(inside >= 0.9 * cases);
  }
}

TEST_CASE("benchmark decomposition and the end-to-end bound") {
  const auto cor = ConsensusParams::tuned();
  testutil::Gen g(47);
  for (int t = 0; t < 60; ++t) {
    const int n = g.integer(3, 6);
    const auto oenv = g.env(n);
    const auto env = oenv.library();
    const auto v = g.profile(n);
    const double efo2 = oracle::efo_truncated(v, oenv, 2);
    const double vic = oracle::vickrey_revenue(v, oenv);
    const double tail = oracle::efo_truncated(v, oenv, cor.m_prime());
    CHECK(efo2 <= cor.m_prime() * vic + tail + 1e-9);
    const auto rev = expected_revenue(MechanismKind::ccepe, v, env, cor);
    CHECK(rev.value * 30.4 >= efo2 * (1 - 1e-6));
  }
}

TEST_CASE("cross-checked extractor covers the truncated benchmark on large digital goods") {
  const auto cor = ConsensusParams::tuned();
  testutil::Gen g(48);
  for (int t = 0; t < 4; ++t) {
    const int n = g.integer(cor.m_prime(), 40);
    const auto v = g.profile(n);
    const auto env = Environment::digital_goods(n);
    const auto rev = expected_revenue(MechanismKind::ccepe_prime, v, env, cor);
    const double bench = efo_truncated(v, env, cor.m_prime());
    CHECK(rev.value >= bench / cor.beta_prime() - 1e-9);
  }
}

TEST_CASE("realized runs") {
  const auto env = one_slot(4);
  const Values v{5, 4, 4, 1};
  const ConsensusParams p{2, 2, 1, 0.5};
  std::set<Arm> arms;
  for (std::uint64_t s = 0; s < 200; ++s) {
    const SharedRandomness coins{Rng(s).uniform01(), mix_seed(s, 1), mix_seed(s, 2), mix_seed(s, 3)};
    const auto res = run_ccepe(v, env, p, coins);
    REQUIRE(res.arm);
    arms.insert(*res.arm);
    const auto sys = sample_realization(env, coins.perm_seed);
    CHECK(res.served.size() <= 1);
    for (int i = 0; i < 4; ++i) {
      const bool served = std::find(res.served.begin(), res.served.end(), i) != res.served.end();
      if (!served) CHECK(res.outcome.p[i] == 0);
      CHECK(res.outcome.p[i] <= v[i] + 1e-9);
    }
    const auto again = run_ccepe(v, env, p, coins);
    CHECK(again.served == res.served);
    CHECK(again.outcome.p == res.outcome.p);
    const auto j = result_to_json(res);
    CHECK(j.contains("arm"));
    CHECK(j.contains("seeds"));
    CHECK(j.at("served").size() == res.served.size());
  }
  CHECK(arms.size() == 2);
}
