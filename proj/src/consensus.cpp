#include "ccepe/consensus.hpp"

#include <algorithm>
#include <climits>
#include <limits>
#include <string>

#include "ccepe/rng.hpp"

namespace ccepe {

void ConsensusParams::validate() const {
  if (!(c > 1.0) || !std::isfinite(c)) throw InputError("consensus parameter c must exceed 1");
  if (!(alpha > 1.0) || !std::isfinite(alpha)) throw InputError("consensus parameter alpha must exceed 1");
  if (m < 1) throw InputError("minimum support m must be at least 1");
  if (!(p >= 0.0 && p <= 1.0)) throw InputError("mixing probability p must lie in [0, 1]");
}

int ConsensusParams::m_prime() const {
  return static_cast<int>(std::floor(m * c * (1.0 + tol::kGrid)));
}

double ConsensusParams::consensus_probability_bound(int t) const {
  const double inner = 1.0 - t * alpha / (m * (alpha - 1.0));
  if (inner <= 0.0) return -std::numeric_limits<double>::infinity();
  return 1.0 + std::log(inner) / std::log(c);
}

double ConsensusParams::beta_prime() const {
  const double q = consensus_probability_bound(2);
  if (!(q > 0.0)) return std::numeric_limits<double>::infinity();
  return c * alpha / q;
}

double ConsensusParams::beta() const {
  const double vickrey = p > 0.0 ? m_prime() / p : std::numeric_limits<double>::infinity();
  const double extractor = p < 1.0 ? beta_prime() / (1.0 - p) : std::numeric_limits<double>::infinity();
  return std::max(vickrey, extractor);
}

double consensus_round(double sigma, double s, double c) {
  if (!(c > 1.0)) throw InputError("consensus base c must exceed 1");
  if (!(s >= 0.0)) throw InputError("statistic must be nonnegative");
  if (s == 0.0) return 0.0;
  const double logc = std::log(c);
  double d = std::floor(std::log(s) / logc - sigma);
  // The log estimate can be off by one near grid points.
  while (std::pow(c, sigma + d) > s * (1.0 + tol::kGrid)) d -= 1.0;
  while (std::pow(c, sigma + d + 1.0) <= s * (1.0 + tol::kGrid)) d += 1.0;
  return std::pow(c, sigma + d);
}

double consensus_constancy_rate(double c, double beta, std::int64_t trials, std::uint64_t seed, double s) {
  if (!(beta >= 1.0)) throw InputError("interval ratio beta must be at least 1");
  if (c < beta) throw InputError("constancy bound needs c >= beta");
  if (trials <= 0) throw InputError("trial count must be positive");
  Rng rng(seed);
  std::int64_t constant = 0;
  for (std::int64_t t = 0; t < trials; ++t) {
    const double sigma = rng.uniform01();
    if (tol::near(consensus_round(sigma, s / beta, c), consensus_round(sigma, s, c))) ++constant;
  }
  return static_cast<double>(constant) / static_cast<double>(trials);
}

int floor_log(double alpha, double x) {
  if (!(x > 0.0)) throw InputError("floor_log needs a positive argument");
  int j = static_cast<int>(std::floor(std::log(x) / std::log(alpha)));
  while (std::pow(alpha, j) > x * (1.0 + tol::kGrid)) --j;
  while (std::pow(alpha, j + 1) <= x * (1.0 + tol::kGrid)) ++j;
  return j;
}

int count_above(std::span<const double> v, double alpha, int j) {
  if (!(alpha > 1.0)) throw InputError("alpha must exceed 1");
  const double threshold = std::pow(alpha, j);
  return static_cast<int>(std::count_if(v.begin(), v.end(), [&](double x) { return x > 0.0 && tol::ge(x, threshold); }));
}

std::map<int, int> count_statistics(std::span<const double> v, double alpha) {
  std::map<int, int> counts;
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (double x : v) {
    if (x > 0.0) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  if (hi == 0.0) return counts;
  const int jlo = floor_log(alpha, lo);
  const int jhi = floor_log(alpha, hi);
  for (int j = jlo; j <= jhi; ++j) counts[j] = count_above(v, alpha, j);
  return counts;
}

int estimate_count(double sigma, int n, double c) {
  if (n <= 0) return 0;
  const double est = consensus_round(sigma, static_cast<double>(n), c);
  const double r = std::round(est);
  if (std::abs(est - r) <= 1e-9 * std::max(1.0, est)) return static_cast<int>(r);
  return static_cast<int>(std::ceil(est));
}

std::map<int, int> estimate_counts(double sigma, std::span<const double> v, const ConsensusParams& params) {
  params.validate();
  std::map<int, int> out;
  for (const auto& [j, n] : count_statistics(v, params.alpha)) {
    const int est = estimate_count(sigma, n, params.c);
    if (est >= params.m) out[j] = est;
  }
  return out;
}

EstimatedProfile estimate_from_counts(double sigma, const std::map<int, int>& counts, int n_out,
                                      const ConsensusParams& params) {
  EstimatedProfile est;
  std::vector<Point> pts;
  for (auto it = counts.rbegin(); it != counts.rend(); ++it) {
    const int count = estimate_count(sigma, it->second, params.c);
    if (count < params.m) continue;
    const double height = std::pow(params.alpha, it->first) * count;
    est.kept.push_back({it->first, count, height});
    pts.push_back({static_cast<double>(count), height});
  }
  const auto env = concave_envelope(pts, n_out);
  est.curve = env.curve;
  est.values.assign(n_out, 0.0);
  int filled = 0;
  for (std::size_t vid : env.vertices) {
    const auto& q = est.kept[vid];
    const double value = std::pow(params.alpha, q.j);
    const int upto = q.count;
    if (upto > filled) {
      std::fill(est.values.begin() + filled, est.values.begin() + upto, value);
      est.blocks.emplace_back(q.j, upto - filled);
      filled = upto;
    }
  }
  return est;
}

EstimatedProfile build_estimated_profile(double sigma, std::span<const double> v, const ConsensusParams& params,
                                         int n_out) {
  params.validate();
  if (n_out < 0) n_out = static_cast<int>(v.size());
  if (n_out < static_cast<int>(std::count_if(v.begin(), v.end(), [](double x) { return x > 0.0; }))) {
    throw InputError("estimated profile length shorter than the number of positive values");
  }
  for (double x : v) {
    if (!std::isfinite(x) || x < 0.0) throw InputError("values must be finite and nonnegative");
  }
  return estimate_from_counts(sigma, count_statistics(v, params.alpha), n_out, params);
}

bool t_consensus_check(double sigma, std::span<const double> v, const ConsensusParams& params, int t, int j) {
  params.validate();
  if (t < 0) throw InputError("t must be nonnegative");
  if (t >= static_cast<int>(v.size())) throw InputError("t must be smaller than the number of agents");
  const int n = count_above(v, params.alpha, j);
  const int base = estimate_count(sigma, n, params.c);
  for (int r = 1; r <= std::min(t, n); ++r) {
    if (estimate_count(sigma, n - r, params.c) != base) return false;
  }
  return true;
}

CrossCheck cross_checked_estimate(double sigma, std::span<const double> v, const ConsensusParams& params) {
  params.validate();
  const int n = static_cast<int>(v.size());
  if (n < 3) throw InputError("cross-checking needs at least 3 agents");
  for (double x : v) {
    if (!std::isfinite(x) || x < 0.0) throw InputError("values must be finite and nonnegative");
  }

  // Pair estimates depend only on the buckets of the two removed agents.
  constexpr int kNoBucket = INT_MIN;
  const auto counts = count_statistics(v, params.alpha);
  std::vector<int> bucket(n, kNoBucket);
  std::map<int, int> bucket_size;
  for (int i = 0; i < n; ++i) {
    if (v[i] > 0.0) bucket[i] = floor_log(params.alpha, v[i]);
    ++bucket_size[bucket[i]];
  }
  std::map<std::pair<int, int>, std::vector<std::pair<int, int>>> pair_blocks;
  auto blocks_for = [&](int a, int b) -> const std::vector<std::pair<int, int>>& {
    const auto key = std::minmax(a, b);
    auto it = pair_blocks.find(key);
    if (it != pair_blocks.end()) return it->second;
    auto reduced = counts;
    for (auto& [j, cnt] : reduced) cnt -= (a >= j ? 1 : 0) + (b >= j ? 1 : 0);
    return pair_blocks.emplace(key, estimate_from_counts(sigma, reduced, n, params).blocks).first->second;
  };

  std::map<int, bool> bucket_checked;
  for (const auto& [b, size] : bucket_size) {
    const std::vector<std::pair<int, int>>* first = nullptr;
    bool agree = true;
    for (const auto& [other, other_size] : bucket_size) {
      if (other_size - (other == b ? 1 : 0) < 1) continue;
      const auto& blocks = blocks_for(b, other);
      if (first == nullptr) {
        first = &blocks;
      } else if (blocks != *first) {
        agree = false;
        break;
      }
    }
    bucket_checked[b] = agree && first != nullptr;
  }

  CrossCheck out;
  for (int i = 0; i < n; ++i) {
    if (bucket_checked[bucket[i]]) out.agents.push_back(i);
  }
  if (out.agents.empty()) {
    out.estimate.values.assign(n, 0.0);
    out.estimate.curve.R.assign(n, 0.0);
    out.estimate.curve.phi.assign(n, 0.0);
    return out;
  }
  const int i = out.agents.front();
  const int partner = i == 0 ? 1 : 0;
  Values rest;
  for (int k = 0; k < n; ++k) {
    if (k != i && k != partner) rest.push_back(v[k]);
  }
  out.estimate = build_estimated_profile(sigma, rest, params, n);
  return out;
}

std::vector<double> sigma_breakpoints(int n, double c) {
  std::vector<double> bp{0.0, 1.0};
  const double logc = std::log(c);
  for (int q = 1; q <= n; ++q) {
    const double l = std::log(static_cast<double>(q)) / logc;
    double f = l - std::floor(l);
    if (f > 1.0 - 1e-13) f = 0.0;
    bp.push_back(f);
  }
  std::sort(bp.begin(), bp.end());
  std::vector<double> out;
  for (double b : bp) {
    if (out.empty() || b - out.back() > 1e-12) out.push_back(b);
  }
  if (out.back() < 1.0) out.push_back(1.0);
  out.back() = 1.0;
  return out;
}

}  // namespace ccepe
