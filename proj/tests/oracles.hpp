#pragma once

// Brute-force reference implementations used by the tests. They share no code with
// the library beyond its public types: envelopes come from all chords, allocations
// from enumerating permutations and feasible sets, and the extractor from re-sorting
// the full profile for every probe report.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "ccepe/envir.hpp"

namespace oracle {

using Values = std::vector<double>;

struct Env {
  enum Kind { digital_goods, k_unit, explicit_sets } kind = digital_goods;
  int n = 0;
  int k = 0;
  std::vector<std::uint64_t> maximal;  // explicit_sets only
  bool permuted = false;

  ccepe::Environment library() const {
    switch (kind) {
      case digital_goods:
        return ccepe::Environment(ccepe::DigitalGoods{n}, permuted);
      case k_unit:
        return ccepe::Environment(ccepe::KUnit{n, k}, permuted);
      default: {
        std::vector<ccepe::Subset> sets;
        for (auto m : maximal) {
          ccepe::Subset s;
          for (int i = 0; i < n; ++i) {
            if (m >> i & 1) s.push_back(i);
          }
          sets.push_back(s);
        }
        return ccepe::Environment(
            ccepe::ExplicitMixture{{{1.0, ccepe::SetSystemRealization::from_maximal_sets(n, sets)}}}, permuted);
      }
    }
  }

  bool feasible(std::uint64_t mask) const {
    switch (kind) {
      case digital_goods:
        return true;
      case k_unit:
        return std::popcount(mask) <= k;
      default:
        return std::any_of(maximal.begin(), maximal.end(), [&](std::uint64_t m) { return (mask & ~m) == 0; });
    }
  }
};

inline Values chord_envelope(const Values& v) {
  const int n = static_cast<int>(v.size());
  Values y(n + 1, 0.0);
  for (int i = 1; i <= n; ++i) y[i] = i * v[i - 1];
  Values R(n);
  double run = 0.0;
  for (int i = 1; i <= n; ++i) {
    double h = 0.0;
    for (int a = 0; a <= i; ++a) {
      for (int b = i; b <= n; ++b) {
        h = std::max(h, a == b ? y[a] : y[a] + (y[b] - y[a]) * (i - a) / static_cast<double>(b - a));
      }
    }
    run = std::max(run, h);
    R[i - 1] = run;
  }
  return R;
}

inline Values slopes(const Values& R) {
  Values phi(R.size());
  for (std::size_t i = 0; i < R.size(); ++i) phi[i] = R[i] - (i ? R[i - 1] : 0.0);
  return phi;
}

/// Probability that the rank-r weight is selected by a uniformly random maximum-weight
/// feasible set using only positive weights.
inline Values rank_allocation(const Env& env, const Values& w) {
  const int n = env.n;
  double scale = 1.0;
  for (double x : w) scale = std::max(scale, std::abs(x));
  const double pos_eps = 1e-12 * scale;
  Values x(n, 0.0);
  if (env.kind == Env::digital_goods) {
    for (int r = 0; r < n; ++r) x[r] = w[r] > pos_eps ? 1.0 : 0.0;
    return x;
  }
  if (n > 12) throw std::runtime_error("oracle enumeration limited to n <= 12");
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double perms = 0.0;
  do {
    // Rank r sits on slot perm[r].
    Values slot_w(n);
    for (int r = 0; r < n; ++r) slot_w[perm[r]] = w[r];
    double best = 0.0;
    std::vector<std::uint64_t> argmax;
    std::vector<std::pair<std::uint64_t, double>> cands;
    for (std::uint64_t m = 0; m < (std::uint64_t{1} << n); ++m) {
      if (!env.feasible(m)) continue;
      bool ok = true;
      double s = 0.0;
      for (int i = 0; i < n; ++i) {
        if (m >> i & 1) {
          ok = ok && slot_w[i] > pos_eps;
          s += slot_w[i];
        }
      }
      if (!ok) continue;
      cands.push_back({m, s});
      best = std::max(best, s);
    }
    for (auto& [m, s] : cands) {
      if (s >= best - 1e-9 * std::max(1.0, best)) argmax.push_back(m);
    }
    for (auto m : argmax) {
      for (int r = 0; r < n; ++r) {
        if (m >> perm[r] & 1) x[r] += 1.0 / argmax.size();
      }
    }
    perms += 1.0;
  } while (env.permuted && std::next_permutation(perm.begin(), perm.end()));
  for (double& xi : x) xi /= perms;
  return x;
}

struct Efo {
  double revenue = 0.0;
  Values x;
};

inline Efo efo(const Values& v, const Env& env) {
  const auto phi = slopes(chord_envelope(v));
  Efo out;
  out.x = rank_allocation(env, phi);
  for (std::size_t i = 0; i < v.size(); ++i) out.revenue += phi[i] * out.x[i];
  return out;
}

inline Values truncate(const Values& v, int m) {
  Values t = v;
  for (int i = 0; i < m && i < static_cast<int>(v.size()); ++i) t[i] = v[m - 1];
  return t;
}

inline double efo_truncated(const Values& v, const Env& env, int m) {
  if (m > static_cast<int>(v.size())) return 0.0;
  return efo(truncate(v, m), env).revenue;
}

/// EF_i = sum over j >= i of v_j (x_j - x_{j+1}), summed term by term.
inline Values ef_payments(const Values& x, const Values& v) {
  const std::size_t n = v.size();
  Values ef(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) ef[i] += v[j] * (x[j] - (j + 1 < n ? x[j + 1] : 0.0));
  }
  return ef;
}

/// Extractor allocation of `agent` reporting z: re-sort everything and check the guard.
inline double pe_allocation(const Values& target, const Values& bids, int agent, double z, const Values& alloc) {
  Values b = bids;
  b[agent] = z;
  std::vector<int> order(b.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int c) { return b[a] > b[c]; });
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (target[r] > b[order[r]] + 1e-12 * std::max(1.0, b[order[r]])) return 0.0;
  }
  for (std::size_t r = 0; r < order.size(); ++r) {
    if (order[r] == agent) return alloc[r];
  }
  return 0.0;
}

struct Outcome {
  Values x;
  Values p;
  double revenue = 0.0;
};

/// Payment identity integrated between every pair of consecutive candidate reports.
inline Outcome pe_outcome(const Values& target, const Values& bids, const Env& env, std::vector<double> extra = {}) {
  const auto alloc = rank_allocation(env, slopes(chord_envelope(target)));
  Outcome out;
  const int n = static_cast<int>(bids.size());
  out.x.assign(n, 0.0);
  out.p.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    std::set<double> pts{0.0};
    for (int k = 0; k < n; ++k) {
      if (k != i) pts.insert(bids[k]);
      pts.insert(target[k]);
    }
    for (double e : extra) pts.insert(e);
    const double v = bids[i];
    double area = 0.0;
    std::vector<double> grid(pts.begin(), pts.end());
    for (std::size_t k = 0; k < grid.size() && grid[k] < v; ++k) {
      const double hi = k + 1 < grid.size() ? std::min(grid[k + 1], v) : v;
      area += pe_allocation(target, bids, i, 0.5 * (grid[k] + hi), alloc) * (hi - grid[k]);
    }
    out.x[i] = pe_allocation(target, bids, i, v, alloc);
    out.p[i] = v * out.x[i] - area;
    out.revenue += out.p[i];
  }
  return out;
}

/// Largest c^(sigma+d) <= s by scanning d.
inline double consensus_round(double sigma, double s, double c) {
  if (s <= 0.0) return 0.0;
  double best = 0.0;
  for (int d = -200; d <= 200; ++d) {
    const double g = std::pow(c, sigma + d);
    if (g <= s * (1.0 + 1e-12)) best = g;
  }
  return best;
}

inline int estimate_count(double sigma, int n, double c) {
  const double est = consensus_round(sigma, n, c);
  const double r = std::round(est);
  if (std::abs(est - r) <= 1e-9 * std::max(1.0, est)) return static_cast<int>(r);
  return static_cast<int>(std::ceil(est));
}

struct Estimate {
  Values values;
  Values R;
};

/// Estimated profile: counts of values at least alpha^j, rounded on the shifted grid,
/// enveloped, and turned into the smallest profile generating that envelope.
inline Estimate estimate(double sigma, const Values& v, double c, double alpha, int m, int n_out) {
  Estimate est;
  est.values.assign(n_out, 0.0);
  est.R.assign(n_out, 0.0);
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (double x : v) {
    if (x > 0.0) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  if (hi == 0.0) return est;
  // Exponents covering every positive value.
  std::map<int, int> kept;  // count -> best exponent at that count
  const int jlo = static_cast<int>(std::floor(std::log(lo) / std::log(alpha))) - 1;
  const int jhi = static_cast<int>(std::floor(std::log(hi) / std::log(alpha))) + 1;
  std::vector<std::pair<int, int>> points;  // (count, j)
  for (int j = jlo; j <= jhi; ++j) {
    const double th = std::pow(alpha, j);
    int cnt = 0;
    for (double x : v) cnt += x > 0.0 && x >= th * (1.0 - 1e-12);
    if (cnt == 0) continue;
    const int e = estimate_count(sigma, cnt, c);
    if (e >= m) points.push_back({e, j});
  }
  if (points.empty()) return est;
  // Envelope over the kept points via chords.
  Values y(n_out + 1, -1.0);
  y[0] = 0.0;
  for (auto [cnt, j] : points) y[cnt] = std::max(y[cnt], std::pow(alpha, j) * cnt);
  Values h(n_out + 1, 0.0);
  for (int i = 0; i <= n_out; ++i) {
    for (int a = 0; a <= i; ++a) {
      if (y[a] < 0.0) continue;
      for (int b = i; b <= n_out; ++b) {
        if (y[b] < 0.0) continue;
        h[i] = std::max(h[i], a == b ? y[a] : y[a] + (y[b] - y[a]) * (i - a) / static_cast<double>(b - a));
      }
    }
  }
  double run = 0.0;
  for (int i = 1; i <= n_out; ++i) {
    run = std::max(run, h[i]);
    est.R[i - 1] = run;
  }
  // Corners: kept points on the curve where the slope strictly drops.
  const double scale = std::max(1.0, run);
  std::vector<int> corners;
  for (int k = 1; k <= n_out; ++k) {
    if (y[k] < 0.0 || std::abs(y[k] - est.R[k - 1]) > 1e-9 * scale) continue;
    const double left = est.R[k - 1] - (k > 1 ? est.R[k - 2] : 0.0);
    const double right = k < n_out ? est.R[k] - est.R[k - 1] : 0.0;
    if (left > right + 1e-9 * scale) corners.push_back(k);
  }
  int filled = 0;
  for (int k : corners) {
    for (int i = filled; i < k; ++i) est.values[i] = est.R[k - 1] / k;
    filled = k;
  }
  return est;
}

struct CrossCheck {
  Values estimate;
  std::vector<int> agents;
};

/// Every unordered pair estimated from scratch; profiles compared by positive entries.
inline CrossCheck cross_check(double sigma, const Values& v, double c, double alpha, int m) {
  const int n = static_cast<int>(v.size());
  auto positive = [](const Values& e) {
    std::multiset<double> s;
    for (double x : e) {
      if (x > 0.0) s.insert(x);
    }
    return s;
  };
  auto near_sets = [](const std::multiset<double>& a, const std::multiset<double>& b) {
    if (a.size() != b.size()) return false;
    auto ib = b.begin();
    for (double x : a) {
      if (std::abs(x - *ib) > 1e-9 * std::max(1.0, x)) return false;
      ++ib;
    }
    return true;
  };
  std::vector<std::vector<Values>> pair(n, std::vector<Values>(n));
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      Values rest;
      for (int k = 0; k < n; ++k) {
        if (k != i && k != j) rest.push_back(v[k]);
      }
      std::sort(rest.begin(), rest.end(), std::greater<>());
      pair[i][j] = pair[j][i] = estimate(sigma, rest, c, alpha, m, n).values;
    }
  }
  CrossCheck out;
  out.estimate.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    const int first = i == 0 ? 1 : 0;
    bool agree = true;
    for (int j = 0; j < n && agree; ++j) {
      if (j != i) agree = near_sets(positive(pair[i][j]), positive(pair[i][first]));
    }
    if (agree) {
      if (out.agents.empty()) out.estimate = pair[i][first];
      out.agents.push_back(i);
    }
  }
  return out;
}

/// Sigma values at which some rounded count can change, for counts up to n.
inline std::vector<double> sigma_cuts(int n, double c) {
  std::vector<double> cuts{0.0, 1.0};
  for (int q = 1; q <= n; ++q) {
    const double l = std::log(static_cast<double>(q)) / std::log(c);
    cuts.push_back(l - std::floor(l));
  }
  std::sort(cuts.begin(), cuts.end());
  std::vector<double> out;
  for (double x : cuts) {
    if (out.empty() || x - out.back() > 1e-12) out.push_back(x);
  }
  return out;
}

/// Expected revenue of the cross-checked extractor, sigma integrated over its cuts.
inline double ccepe_prime_revenue(const Values& v, const Env& env, double c, double alpha, int m) {
  const auto cuts = sigma_cuts(static_cast<int>(v.size()), c);
  double total = 0.0;
  std::map<std::pair<Values, std::vector<int>>, double> memo;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double sigma = 0.5 * (cuts[k] + cuts[k + 1]);
    const auto cc = cross_check(sigma, v, c, alpha, m);
    double rev = 0.0;
    if (!cc.agents.empty()) {
      const auto key = std::make_pair(cc.estimate, cc.agents);
      auto it = memo.find(key);
      if (it == memo.end()) {
        const auto out = pe_outcome(cc.estimate, v, env);
        double r = 0.0;
        for (int i : cc.agents) r += out.p[i];
        it = memo.emplace(key, r).first;
      }
      rev = it->second;
    }
    total += (cuts[k + 1] - cuts[k]) * rev;
  }
  return total;
}

/// Probability the top bidder's slot is feasible on its own, times the second bid.
inline double vickrey_revenue(const Values& v, const Env& env) {
  Values s = v;
  std::sort(s.begin(), s.end(), std::greater<>());
  double q = 0.0;
  if (!env.permuted) {
    q = env.feasible(1) ? 1.0 : 0.0;
  } else {
    for (int i = 0; i < env.n; ++i) q += env.feasible(std::uint64_t{1} << i) ? 1.0 : 0.0;
    q /= env.n;
  }
  return q * s[1];
}

}  // namespace oracle
