#include "ccepe/profit_extractor.hpp"

#include <algorithm>
#include <numeric>

namespace ccepe {
namespace {

bool target_ok(double target, double bid) { return !tol::gt(target, bid); }

// Agent's view of the others: their bids in rank order plus guard feasibility of
// every insertion position.
struct AgentView {
  int agent;
  std::vector<double> others;     // descending
  std::vector<int> others_index;  // original indices, same order
  std::vector<char> prefix_ok;    // target_k <= others_k for all k < r
  std::vector<char> suffix_ok;    // target_k <= others_{k-1} for all k > r

  AgentView(std::span<const double> bids, std::span<const int> order, int agent_, std::span<const double> target)
      : agent(agent_) {
    for (int idx : order) {
      if (idx == agent) continue;
      others.push_back(bids[idx]);
      others_index.push_back(idx);
    }
    const int n = static_cast<int>(bids.size());
    prefix_ok.assign(n, 1);
    suffix_ok.assign(n, 1);
    for (int r = 1; r < n; ++r) prefix_ok[r] = prefix_ok[r - 1] && target_ok(target[r - 1], others[r - 1]);
    for (int r = n - 2; r >= 0; --r) suffix_ok[r] = suffix_ok[r + 1] && target_ok(target[r + 1], others[r]);
  }

  int rank(double z) const {
    // Others strictly above z, then equal bids with a smaller index.
    auto it = std::partition_point(others.begin(), others.end(), [&](double o) { return o > z; });
    int r = static_cast<int>(it - others.begin());
    for (auto k = it; k != others.end() && *k == z; ++k) {
      if (others_index[k - others.begin()] < agent) ++r;
    }
    return r;
  }
};

double view_allocation(const AgentView& view, double z, std::span<const double> target,
                       std::span<const double> rank_alloc) {
  const int r = view.rank(z);
  if (!view.prefix_ok[r] || !view.suffix_ok[r] || !target_ok(target[r], z)) return 0.0;
  return rank_alloc[r];
}

std::vector<StepRule::Step> view_steps(const AgentView& view, std::span<const double> target,
                                       std::span<const double> rank_alloc) {
  std::vector<double> bp{0.0};
  for (double o : view.others) bp.push_back(o);
  for (double t : target) bp.push_back(t);
  std::sort(bp.begin(), bp.end());
  bp.erase(std::unique(bp.begin(), bp.end()), bp.end());
  std::vector<StepRule::Step> steps;
  for (std::size_t k = 0; k < bp.size(); ++k) {
    const double probe = k + 1 < bp.size() ? 0.5 * (bp[k] + bp[k + 1]) : bp[k] + 1.0;
    const double level = view_allocation(view, probe, target, rank_alloc);
    if (!steps.empty() && steps.back().level == level) continue;
    steps.push_back({bp[k], level});
  }
  return steps;
}

void check_lengths(std::span<const double> target, std::span<const double> bids) {
  if (target.size() != bids.size()) throw InputError("target and bid profiles must have equal length");
  for (double b : bids) {
    if (!std::isfinite(b) || b < 0.0) throw InputError("bids must be finite and nonnegative");
  }
}

}  // namespace

std::vector<int> rank_order(std::span<const double> bids) {
  std::vector<int> order(bids.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return bids[a] > bids[b]; });
  return order;
}

ProfitExtractor::ProfitExtractor(Values target, TiePolicy policy)
    : target_(std::move(target)), curve_(revenue_curve(target_)), policy_(policy) {}

bool ProfitExtractor::guard(std::span<const double> sorted_bids) const {
  check_lengths(target_, sorted_bids);
  for (std::size_t k = 0; k < target_.size(); ++k) {
    if (!target_ok(target_[k], sorted_bids[k])) return false;
  }
  return true;
}

Subset ProfitExtractor::served_set(std::span<const double> bids, const SetSystemRealization& sys,
                                   std::uint64_t tie_seed) const {
  check_lengths(target_, bids);
  const auto order = rank_order(bids);
  Values sorted(bids.size());
  for (std::size_t r = 0; r < order.size(); ++r) sorted[r] = bids[order[r]];
  if (!guard(sorted)) return {};
  Subset served;
  for (int slot : maximize_weights(sys, curve_.phi, tie_seed, policy_)) served.push_back(order[slot]);
  std::sort(served.begin(), served.end());
  return served;
}

Values ProfitExtractor::rank_allocation(const Environment& env, const Mode& mode) const {
  if (env.n() != static_cast<int>(target_.size())) throw InputError("environment size must match the target");
  return allocation_by_rank(env, curve_.phi, mode, policy_);
}

double ProfitExtractor::allocation_at(std::span<const double> bids, int agent, double z,
                                      std::span<const double> rank_alloc) const {
  check_lengths(target_, bids);
  if (agent < 0 || agent >= static_cast<int>(bids.size())) throw InputError("agent index out of range");
  const auto order = rank_order(bids);
  const AgentView view(bids, order, agent, target_);
  return view_allocation(view, z, target_, rank_alloc);
}

StepRule ProfitExtractor::allocation_rule(std::span<const double> bids, int agent,
                                          std::span<const double> rank_alloc) const {
  check_lengths(target_, bids);
  if (agent < 0 || agent >= static_cast<int>(bids.size())) throw InputError("agent index out of range");
  const AgentView view(bids, rank_order(bids), agent, target_);
  return StepRule::unchecked(view_steps(view, target_, rank_alloc));
}

Outcome ProfitExtractor::outcome(std::span<const double> bids, std::span<const double> rank_alloc) const {
  check_lengths(target_, bids);
  const int n = static_cast<int>(bids.size());
  const auto order = rank_order(bids);
  Values x(n, 0.0);
  Values p(n, 0.0);
  for (int i = 0; i < n; ++i) {
    const AgentView view(bids, order, i, target_);
    const auto rule = StepRule::unchecked(view_steps(view, target_, rank_alloc));
    x[i] = view_allocation(view, bids[i], target_, rank_alloc);
    p[i] = bids[i] * x[i] - rule.integral(bids[i]);
  }
  return make_outcome(bids, std::move(x), std::move(p));
}

Outcome ProfitExtractor::outcome(std::span<const double> bids, const Environment& env, const Mode& mode) const {
  const auto alloc = rank_allocation(env, mode);
  return outcome(bids, alloc);
}

Subset pe_served_set(std::span<const double> target, std::span<const double> bids, const SetSystemRealization& sys,
                     std::uint64_t tie_seed) {
  return ProfitExtractor(Values(target.begin(), target.end())).served_set(bids, sys, tie_seed);
}

double pe_allocation_at(std::span<const double> target, std::span<const double> bids, int agent, double z,
                        const Environment& env, const Mode& mode) {
  const ProfitExtractor pe(Values(target.begin(), target.end()));
  const auto alloc = pe.rank_allocation(env, mode);
  return pe.allocation_at(bids, agent, z, alloc);
}

Outcome pe_outcome(std::span<const double> target, std::span<const double> bids, const Environment& env,
                   const Mode& mode) {
  return ProfitExtractor(Values(target.begin(), target.end())).outcome(bids, env, mode);
}

}  // namespace ccepe
