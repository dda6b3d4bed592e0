#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace ccepe {

using Values = std::vector<double>;
/// Sorted list of 0-based slot (or agent) indices.
using Subset = std::vector<int>;

/// Malformed arguments: out-of-range indices, non-monotone rules, bad parameters.
class InputError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Exact evaluation requested on an instance too large to enumerate.
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid experiment or CLI configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace tol {
/// Relative tolerance for grid and threshold comparisons.
inline constexpr double kGrid = 1e-12;
/// Relative tolerance when comparing sums of weights for argmax ties.
inline constexpr double kSum = 1e-9;

inline bool ge(double a, double b) { return a >= b - kGrid * std::max(1.0, std::abs(b)); }
inline bool gt(double a, double b) { return a > b + kGrid * std::max(1.0, std::abs(b)); }
inline bool near(double a, double b, double rel = kGrid) {
  return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}
}  // namespace tol

/// Which expectation route an evaluation uses.
struct Exact {};
struct MonteCarlo {
  std::int64_t trials = 1000;
  std::uint64_t seed = 0;
};
using Mode = std::variant<Exact, MonteCarlo>;

inline bool is_exact(const Mode& mode) { return std::holds_alternative<Exact>(mode); }

/// How zero-weight slots are treated when maximizing weights.
///
/// `pool`: sets differing only in zero-weight members are all maximizers, and the
/// maximizer is drawn uniformly among them. `positive_only`: zero-weight slots are
/// never selected; ties among equal positive weights remain uniformly random.
enum class TiePolicy { pool, positive_only };

}  // namespace ccepe
