#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "ccepe/common.hpp"
#include "ccepe/revcurve.hpp"

namespace ccepe {

/// Grid base c, statistic scale alpha, minimum support m, and the probability p of
/// running the Pseudo-Vickrey arm in the mixed mechanism.
struct ConsensusParams {
  double c = 2.0;
  double alpha = 2.0;
  int m = 1;
  double p = 0.5;

  /// Throws InputError unless c > 1, alpha > 1, m >= 1, 0 <= p <= 1.
  void validate() const;

  /// floor(m c), the truncation depth of the analysis benchmark.
  int m_prime() const;

  /// 1 + log_c(1 - t alpha / (m (alpha - 1))); may be <= 0 when parameters are loose.
  double consensus_probability_bound(int t = 2) const;

  /// c alpha / consensus_probability_bound(2), +inf when the bound is not positive.
  double beta_prime() const;

  /// max{floor(m c) / p, beta' / (1 - p)}.
  double beta() const;

  /// Parameters for which beta() is just below 30.4.
  static ConsensusParams tuned() { return {1.666, 2.734, 12, 0.627}; }
};

/// Shared coins of one mechanism run.
struct SharedRandomness {
  double sigma = 0.0;
  std::uint64_t tie_seed = 0;
  std::uint64_t perm_seed = 0;
  std::uint64_t mix_seed = 0;
};

/// Largest element of {c^(sigma+d) : d integer} not exceeding s; 0 when s = 0.
double consensus_round(double sigma, double s, double c);

/// Fraction of sigma draws for which consensus_round is constant on [s/beta, s].
double consensus_constancy_rate(double c, double beta, std::int64_t trials, std::uint64_t seed, double s = 10.0);

/// Largest j with alpha^j <= x (x > 0), robust at exact grid points.
int floor_log(double alpha, double x);

/// |{i : v_i >= alpha^j}|.
int count_above(std::span<const double> v, double alpha, int j);

/// n_j for every j from floor_log(min positive value) to floor_log(max value).
std::map<int, int> count_statistics(std::span<const double> v, double alpha);

/// ceil(consensus_round(sigma, n, c)) with grid-point tolerance.
int estimate_count(double sigma, int n, double c);

/// Consensus estimates of the count statistics that meet the minimum support m.
std::map<int, int> estimate_counts(double sigma, std::span<const double> v, const ConsensusParams& params);

struct KeptPoint {
  int j;
  int count;      // estimated count, >= m
  double height;  // alpha^j * count
};

/// Estimated valuation profile (zero padded to n) and its revenue curve.
struct EstimatedProfile {
  Values values;
  RevenueCurve curve;
  std::vector<KeptPoint> kept;
  /// (j, multiplicity) of the positive entries of `values`, highest j first.
  std::vector<std::pair<int, int>> blocks;

  /// Profiles are compared by the multiset of positive entries.
  bool same_estimate(const EstimatedProfile& other) const { return blocks == other.blocks; }
};

/// Build the estimate from (possibly unsorted) values; the result has length `n_out`
/// (defaults to v.size()).
EstimatedProfile build_estimated_profile(double sigma, std::span<const double> v, const ConsensusParams& params,
                                         int n_out = -1);

/// Estimate from precomputed counts n_j.
EstimatedProfile estimate_from_counts(double sigma, const std::map<int, int>& counts, int n_out,
                                      const ConsensusParams& params);

/// Whether statistic j keeps its estimate after removing any t agents.
bool t_consensus_check(double sigma, std::span<const double> v, const ConsensusParams& params, int t, int j);

struct CrossCheck {
  EstimatedProfile estimate;
  Subset agents;  // the cross-checked set I
};

/// Leave-two-out estimates for every unordered pair; I holds the agents whose pair
/// estimates all coincide. Values may be in any order; agents are 0-based indices.
CrossCheck cross_checked_estimate(double sigma, std::span<const double> v, const ConsensusParams& params);

/// Sorted breakpoints in [0,1] between which every count estimate with counts up to n
/// is constant in sigma (includes 0 and 1).
std::vector<double> sigma_breakpoints(int n, double c);

}  // namespace ccepe
