#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"

namespace testutil {

using Values = std::vector<double>;

inline bool near(double a, double b, double tol = 1e-9) {
  return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

inline bool near_all(const Values& a, const Values& b, double tol = 1e-9) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!near(a[i], b[i], tol)) return false;
  }
  return true;
}

struct Gen {
  std::mt19937_64 eng;
  explicit Gen(std::uint64_t seed) : eng(seed) {}

  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng); }
  double real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(eng); }
  bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(eng); }

  /// Non-increasing profile; half the time on a small integer grid to force ties.
  Values profile(int n) {
    Values v(n);
    const int family = integer(0, 2);
    for (double& x : v) {
      if (family == 0) {
        x = integer(1, 6);
      } else if (family == 1) {
        x = std::ldexp(1.0, integer(0, 4));
      } else {
        x = real(0.25, 12.0);
      }
      if (coin(0.05)) x = 0.0;
    }
    std::sort(v.begin(), v.end(), std::greater<>());
    return v;
  }

  /// Symmetric environment: digital goods, k-unit, or a permuted explicit system (n <= 6).
  oracle::Env env(int n, bool allow_explicit = true) {
    oracle::Env e;
    e.n = n;
    const int kind = integer(0, allow_explicit && n <= 6 ? 2 : 1);
    if (kind == 0) return e;
    if (kind == 1) {
      e.kind = oracle::Env::k_unit;
      e.k = integer(1, n);
      return e;
    }
    e.kind = oracle::Env::explicit_sets;
    e.permuted = true;
    const int sets = integer(1, 3);
    for (int s = 0; s < sets; ++s) {
      std::uint64_t m = 0;
      while (m == 0) m = std::uniform_int_distribution<std::uint64_t>(0, (std::uint64_t{1} << n) - 1)(eng);
      e.maximal.push_back(m);
    }
    return e;
  }

  /// Non-increasing target dominated by v.
  Values target(const Values& v) {
    Values t(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      t[i] = coin(0.3) ? v[i] : v[i] * real(0.0, 1.0);
      if (i > 0) t[i] = std::min(t[i], t[i - 1]);
    }
    if (coin(0.3)) std::fill(t.begin() + integer(0, static_cast<int>(v.size())), t.end(), 0.0);
    return t;
  }
};

}  // namespace testutil
