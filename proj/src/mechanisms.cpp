#include "ccepe/mechanisms.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ccepe/rng.hpp"

namespace ccepe {
namespace {

void check_bids(std::span<const double> bids, const Environment& env, std::size_t min_n) {
  if (bids.size() < min_n) throw InputError("mechanism needs at least " + std::to_string(min_n) + " agents");
  if (static_cast<int>(bids.size()) != env.n()) throw InputError("bid count must match environment size");
  for (double b : bids) {
    if (!std::isfinite(b) || b < 0.0) throw InputError("bids must be finite and nonnegative");
  }
}

double second_highest(std::span<const double> bids) {
  Values sorted(bids.begin(), bids.end());
  std::partial_sort(sorted.begin(), sorted.begin() + 2, sorted.end(), std::greater<>());
  return sorted[1];
}

std::vector<int> top_agents(std::span<const double> bids) {
  const double top = *std::max_element(bids.begin(), bids.end());
  std::vector<int> out;
  for (int i = 0; i < static_cast<int>(bids.size()); ++i) {
    if (bids[i] == top) out.push_back(i);
  }
  return out;
}

// Extractor outcome restricted to the cross-checked agents.
Outcome trimmed_outcome(std::span<const double> bids, const CrossCheck& cc, std::span<const double> rank_alloc) {
  const int n = static_cast<int>(bids.size());
  if (cc.agents.empty()) return make_outcome(bids, Values(n, 0.0), Values(n, 0.0));
  const ProfitExtractor pe(cc.estimate.values);
  auto out = pe.outcome(bids, rank_alloc);
  Values x(n, 0.0);
  Values p(n, 0.0);
  for (int i : cc.agents) {
    x[i] = out.x[i];
    p[i] = out.p[i];
  }
  return make_outcome(bids, std::move(x), std::move(p));
}

Subset positive_support(const Values& x) {
  Subset s;
  for (int i = 0; i < static_cast<int>(x.size()); ++i) {
    if (x[i] > 0.0) s.push_back(i);
  }
  return s;
}

Outcome mix(std::span<const double> bids, const Outcome& a, double wa, const Outcome& b, double wb) {
  Values x(bids.size());
  Values p(bids.size());
  for (std::size_t i = 0; i < bids.size(); ++i) {
    x[i] = wa * a.x[i] + wb * b.x[i];
    p[i] = wa * a.p[i] + wb * b.p[i];
  }
  return make_outcome(bids, std::move(x), std::move(p));
}

using Blocks = std::vector<std::pair<int, int>>;

}  // namespace

std::string to_string(Arm arm) { return arm == Arm::vickrey ? "vickrey" : "ccepe_prime"; }

std::string to_string(MechanismKind kind) {
  switch (kind) {
    case MechanismKind::pseudo_vickrey:
      return "pseudo_vickrey";
    case MechanismKind::ccepe_prime:
      return "ccepe_prime";
    case MechanismKind::ccepe:
      return "ccepe";
  }
  return "ccepe";
}

MechanismKind parse_mechanism(const std::string& name) {
  if (name == "pseudo_vickrey") return MechanismKind::pseudo_vickrey;
  if (name == "ccepe_prime") return MechanismKind::ccepe_prime;
  if (name == "ccepe") return MechanismKind::ccepe;
  throw ConfigError("unknown mechanism '" + name + "'");
}

Outcome pseudo_vickrey(std::span<const double> bids, const Environment& env) {
  check_bids(bids, env, 2);
  const int n = static_cast<int>(bids.size());
  const double q = top_slot_feasible_probability(env);
  const double price = second_highest(bids);
  const auto top = top_agents(bids);
  Values x(n, 0.0);
  Values p(n, 0.0);
  for (int i : top) {
    x[i] = q / static_cast<double>(top.size());
    p[i] = x[i] * price;
  }
  return make_outcome(bids, std::move(x), std::move(p));
}

MechanismResult ccepe_prime(std::span<const double> bids, const Environment& env, const ConsensusParams& params,
                            double sigma, const Mode& mode) {
  check_bids(bids, env, 3);
  MechanismResult res;
  res.sigma = sigma;
  res.seeds.sigma = sigma;
  res.arm = Arm::ccepe_prime;
  auto cc = cross_checked_estimate(sigma, bids, params);
  const auto alloc = ProfitExtractor(cc.estimate.values).rank_allocation(env, mode);
  res.outcome = trimmed_outcome(bids, cc, alloc);
  res.served = positive_support(res.outcome.x);
  res.diagnostics = std::move(cc);
  return res;
}

MechanismResult ccepe(std::span<const double> bids, const Environment& env, const ConsensusParams& params,
                      double sigma, const Mode& mode) {
  params.validate();
  auto res = ccepe_prime(bids, env, params, sigma, mode);
  const auto vic = pseudo_vickrey(bids, env);
  res.outcome = mix(bids, vic, params.p, res.outcome, 1.0 - params.p);
  res.served = positive_support(res.outcome.x);
  res.arm.reset();
  return res;
}

MechanismResult run_ccepe(std::span<const double> bids, const Environment& env, const ConsensusParams& params,
                          const SharedRandomness& coins, const Mode& mode) {
  params.validate();
  check_bids(bids, env, 3);
  const int n = static_cast<int>(bids.size());
  MechanismResult res;
  res.sigma = coins.sigma;
  res.seeds = coins;
  Rng arm_rng(coins.mix_seed);
  res.arm = arm_rng.bernoulli(params.p) ? Arm::vickrey : Arm::ccepe_prime;
  const auto sys = sample_realization(env, coins.perm_seed);
  Values x(n, 0.0);
  Values p(n, 0.0);

  if (*res.arm == Arm::vickrey) {
    const auto top = top_agents(bids);
    Rng tie(coins.tie_seed);
    const int winner = top[tie.below(top.size())];
    const int slot0[] = {0};
    if (sys.is_feasible(slot0)) {
      x[winner] = 1.0;
      p[winner] = second_highest(bids);
      res.served = {winner};
    }
  } else {
    auto cc = cross_checked_estimate(coins.sigma, bids, params);
    if (!cc.agents.empty()) {
      const ProfitExtractor pe(cc.estimate.values);
      const auto expected = pe.outcome(bids, pe.rank_allocation(env, mode));
      for (int i : pe.served_set(bids, sys, coins.tie_seed)) {
        if (!std::binary_search(cc.agents.begin(), cc.agents.end(), i)) continue;
        res.served.push_back(i);
        x[i] = 1.0;
        p[i] = expected.x[i] > 0.0 ? expected.p[i] / expected.x[i] : 0.0;
      }
    }
    res.diagnostics = std::move(cc);
  }
  res.outcome = make_outcome(bids, std::move(x), std::move(p));
  return res;
}

Outcome expected_outcome(MechanismKind kind, std::span<const double> bids, const Environment& env,
                         const ConsensusParams& params) {
  params.validate();
  if (kind == MechanismKind::pseudo_vickrey) return pseudo_vickrey(bids, env);
  check_bids(bids, env, 3);
  const int n = static_cast<int>(bids.size());

  // Estimates and I are constant between breakpoints, so one midpoint per interval suffices.
  std::map<Blocks, Values> alloc_memo;
  std::map<std::pair<Blocks, Subset>, Outcome> outcome_memo;
  Values x(n, 0.0);
  Values p(n, 0.0);
  const auto bp = sigma_breakpoints(n, params.c);
  for (std::size_t k = 0; k + 1 < bp.size(); ++k) {
    const double width = bp[k + 1] - bp[k];
    const auto cc = cross_checked_estimate(0.5 * (bp[k] + bp[k + 1]), bids, params);
    auto key = std::make_pair(cc.estimate.blocks, cc.agents);
    auto it = outcome_memo.find(key);
    if (it == outcome_memo.end()) {
      auto a = alloc_memo.find(cc.estimate.blocks);
      if (a == alloc_memo.end()) {
        a = alloc_memo.emplace(cc.estimate.blocks, ProfitExtractor(cc.estimate.values).rank_allocation(env, Exact{}))
                .first;
      }
      it = outcome_memo.emplace(std::move(key), trimmed_outcome(bids, cc, a->second)).first;
    }
    for (int i = 0; i < n; ++i) {
      x[i] += width * it->second.x[i];
      p[i] += width * it->second.p[i];
    }
  }
  auto prime = make_outcome(bids, std::move(x), std::move(p));
  if (kind == MechanismKind::ccepe_prime) return prime;
  return mix(bids, pseudo_vickrey(bids, env), params.p, prime, 1.0 - params.p);
}

RevenueEstimate expected_revenue(MechanismKind kind, std::span<const double> bids, const Environment& env,
                                 const ConsensusParams& params, const Mode& mode) {
  params.validate();
  RevenueEstimate est;
  const auto* mc = std::get_if<MonteCarlo>(&mode);
  if (mc == nullptr) {
    est.value = expected_outcome(kind, bids, env, params).revenue;
    est.vickrey_share = kind == MechanismKind::pseudo_vickrey ? 1.0 : kind == MechanismKind::ccepe ? params.p : 0.0;
    return est;
  }
  if (mc->trials <= 0) throw InputError("Monte-Carlo trial count must be positive");
  check_bids(bids, env, kind == MechanismKind::pseudo_vickrey ? 2 : 3);
  const double price = second_highest(bids);

  double mean = 0.0;
  double m2 = 0.0;
  double sigma_sum = 0.0;
  std::int64_t vickrey_trials = 0;
  for (std::int64_t t = 0; t < mc->trials; ++t) {
    const auto s = mix_seed(mc->seed, static_cast<std::uint64_t>(t));
    Rng rng(s);
    const double sigma = rng.uniform01();
    bool vickrey = kind == MechanismKind::pseudo_vickrey;
    if (kind == MechanismKind::ccepe) vickrey = rng.bernoulli(params.p);
    sigma_sum += sigma;
    const auto sys = sample_realization(env, mix_seed(s, 1));
    double revenue = 0.0;
    if (vickrey) {
      ++vickrey_trials;
      const int slot0[] = {0};
      if (sys.is_feasible(slot0)) revenue = price;
    } else {
      const auto cc = cross_checked_estimate(sigma, bids, params);
      if (!cc.agents.empty()) {
        // Payments are linear in the per-rank allocation, so the realized indicator
        // gives an unbiased sample.
        const ProfitExtractor pe(cc.estimate.values);
        Values hit(bids.size(), 0.0);
        for (int r : maximize_weights(sys, pe.curve().phi, mix_seed(s, 2), pe.policy())) hit[r] = 1.0;
        revenue = trimmed_outcome(bids, cc, hit).revenue;
      }
    }
    const double delta = revenue - mean;
    mean += delta / static_cast<double>(t + 1);
    m2 += delta * (revenue - mean);
  }
  const double T = static_cast<double>(mc->trials);
  est.value = mean;
  est.trials = mc->trials;
  est.sigma_mean = sigma_sum / T;
  est.vickrey_share = static_cast<double>(vickrey_trials) / T;
  if (mc->trials > 1) {
    const double var = std::max(0.0, m2 / (T - 1.0));
    est.half_width = 1.96 * std::sqrt(var / T);
  }
  return est;
}

}  // namespace ccepe
