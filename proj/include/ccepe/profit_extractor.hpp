#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ccepe/common.hpp"
#include "ccepe/envir.hpp"
#include "ccepe/revcurve.hpp"

namespace ccepe {

/// Agent indices sorted by bid, highest first; equal bids keep index order.
std::vector<int> rank_order(std::span<const double> bids);

/// Profit extractor parameterized by a target profile.
///
/// Rejects everyone unless the sorted bids dominate the target; otherwise assigns
/// the target's virtual values to agents by rank and serves a maximum-weight
/// feasible set. Agents occupy slots in rank order; permuted environments
/// relabel slots at random. Payments follow the payment identity, integrated
/// exactly over the breakpoints where the rule can change (the targets and the
/// other bids).
class ProfitExtractor {
 public:
  explicit ProfitExtractor(Values target, TiePolicy policy = TiePolicy::positive_only);

  const Values& target() const { return target_; }
  const RevenueCurve& curve() const { return curve_; }
  TiePolicy policy() const { return policy_; }

  /// True unless target_k > sorted_bids_k for some k.
  bool guard(std::span<const double> sorted_bids) const;

  /// Realized served agents on a fixed set system.
  Subset served_set(std::span<const double> bids, const SetSystemRealization& sys, std::uint64_t tie_seed) const;

  /// Per-rank service probabilities of the weight maximizer (ignoring the guard).
  Values rank_allocation(const Environment& env, const Mode& mode) const;

  /// x_agent(z, bids_{-agent}) given per-rank service probabilities.
  double allocation_at(std::span<const double> bids, int agent, double z, std::span<const double> rank_alloc) const;

  /// The agent's allocation as a function of its own report.
  StepRule allocation_rule(std::span<const double> bids, int agent, std::span<const double> rank_alloc) const;

  Outcome outcome(std::span<const double> bids, std::span<const double> rank_alloc) const;
  Outcome outcome(std::span<const double> bids, const Environment& env, const Mode& mode) const;

 private:
  Values target_;
  RevenueCurve curve_;
  TiePolicy policy_;
};

Subset pe_served_set(std::span<const double> target, std::span<const double> bids, const SetSystemRealization& sys,
                     std::uint64_t tie_seed);

double pe_allocation_at(std::span<const double> target, std::span<const double> bids, int agent, double z,
                        const Environment& env, const Mode& mode = Exact{});

Outcome pe_outcome(std::span<const double> target, std::span<const double> bids, const Environment& env,
                   const Mode& mode = Exact{});

}  // namespace ccepe
