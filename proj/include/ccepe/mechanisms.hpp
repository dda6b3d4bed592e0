#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include "ccepe/common.hpp"
#include "ccepe/consensus.hpp"
#include "ccepe/envir.hpp"
#include "ccepe/profit_extractor.hpp"
#include "ccepe/revcurve.hpp"

namespace ccepe {

enum class Arm { vickrey, ccepe_prime };
enum class MechanismKind { pseudo_vickrey, ccepe_prime, ccepe };

std::string to_string(Arm arm);
std::string to_string(MechanismKind kind);
/// Parses "pseudo_vickrey", "ccepe_prime" or "ccepe"; throws ConfigError otherwise.
MechanismKind parse_mechanism(const std::string& name);

struct MechanismResult {
  Outcome outcome;
  /// Realized runs: the served agents. Expected outcomes: agents with positive allocation.
  Subset served;
  /// Set for realized runs and single-arm outcomes; empty for the mixed expectation.
  std::optional<Arm> arm;
  std::optional<CrossCheck> diagnostics;
  double sigma = 0.0;
  SharedRandomness seeds;
};

/// Expected outcome of serving the top bidder at the second-highest bid when its
/// slot is feasible. Tied top bidders split the service probability evenly.
Outcome pseudo_vickrey(std::span<const double> bids, const Environment& env);

/// Cross-checked consensus-estimate profit extraction at a fixed sigma: run the
/// extractor targeting the cross-checked estimate and keep only agents in I.
MechanismResult ccepe_prime(std::span<const double> bids, const Environment& env, const ConsensusParams& params,
                            double sigma, const Mode& mode = Exact{});

/// p-mixture of pseudo_vickrey and ccepe_prime at a fixed sigma.
MechanismResult ccepe(std::span<const double> bids, const Environment& env, const ConsensusParams& params,
                      double sigma, const Mode& mode = Exact{});

/// One realized run. The arm comes from `mix_seed`, the realization from `perm_seed`
/// and ties from `tie_seed`; served agents pay their expected payment divided by
/// their service probability (`mode` selects how that expectation is computed).
MechanismResult run_ccepe(std::span<const double> bids, const Environment& env, const ConsensusParams& params,
                          const SharedRandomness& coins, const Mode& mode = Exact{});

/// Expected outcome with sigma integrated out exactly over its breakpoint intervals.
Outcome expected_outcome(MechanismKind kind, std::span<const double> bids, const Environment& env,
                         const ConsensusParams& params);

struct RevenueEstimate {
  double value = 0.0;
  /// 95% normal-approximation half-width; 0 for exact evaluation.
  double half_width = 0.0;
  std::int64_t trials = 0;
  /// Share of trials (or probability mass) on the Pseudo-Vickrey arm.
  double vickrey_share = 0.0;
  /// Mean sigma over trials; 0.5 for exact evaluation.
  double sigma_mean = 0.5;
};

RevenueEstimate expected_revenue(MechanismKind kind, std::span<const double> bids, const Environment& env,
                                 const ConsensusParams& params, const Mode& mode = Exact{});

}  // namespace ccepe
