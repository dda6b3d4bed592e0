#pragma once

#include <span>
#include <utility>
#include <vector>

#include "ccepe/common.hpp"
#include "ccepe/envir.hpp"

namespace ccepe {

/// R[i-1] holds R_i for i = 1..n (R_0 = 0 is implicit); phi[i-1] is the left slope at i.
struct RevenueCurve {
  Values R;
  Values phi;
};

struct Point {
  double x;
  double y;
};

/// Smallest concave nondecreasing function above `points` and the origin, sampled at
/// integers 1..n. Point abscissae must be integers in [1, n]. `vertices` lists the
/// indices of points that are strict corners of the rising part of the curve, in
/// increasing x.
struct Envelope {
  RevenueCurve curve;
  std::vector<std::size_t> vertices;
};

Envelope concave_envelope(std::span<const Point> points, int n);

/// Throws InputError unless v is finite, nonnegative and non-increasing.
void validate_profile(std::span<const double> v, std::size_t min_size = 1);

RevenueCurve revenue_curve(std::span<const double> v);

/// Successive differences R_i - R_{i-1}.
Values virtual_values(std::span<const double> R);

/// Envy-free payments EF_i = sum_{j>=i} v_j (x_j - x_{j+1}), x_{n+1} = 0.
Values ef_payments(std::span<const double> x, std::span<const double> v);

struct EfoResult {
  double revenue = 0.0;
  Values x;
};

/// Optimal envy-free revenue: virtual-surplus maximization, zero virtual values unserved.
EfoResult efo(std::span<const double> v, const Environment& env, const Mode& mode = Exact{});

/// (v_m, ..., v_m, v_{m+1}, ..., v_n) with the first m entries set to v_m.
Values truncated_profile(std::span<const double> v, int m);

double efo_benchmark2(std::span<const double> v, const Environment& env, const Mode& mode = Exact{});
double efo_truncated(std::span<const double> v, const Environment& env, int m, const Mode& mode = Exact{});

/// Sum of envy-free payments of `agents` (0-based ranks) under the EFO allocation.
double efo_contribution(std::span<const double> v, const Environment& env, std::span<const int> agents,
                        const Mode& mode = Exact{});

/// Nondecreasing piecewise-constant allocation rule z -> x(z). Each step holds
/// `level` on [from, next.from); the rule is 0 below the first step.
class StepRule {
 public:
  struct Step {
    double from;
    double level;
  };

  StepRule() = default;
  /// Steps must have strictly increasing `from >= 0` and nondecreasing levels in [0, 1].
  explicit StepRule(std::vector<Step> steps);
  /// Skips the monotonicity check; for rules built from sampled allocations.
  static StepRule unchecked(std::vector<Step> steps);

  double at(double z) const;
  /// Integral of the rule over [0, upto].
  double integral(double upto) const;
  const std::vector<Step>& steps() const { return steps_; }

 private:
  std::vector<Step> steps_;
};

/// Payment identity p = v x(v) - \int_0^v x(z) dz.
double ic_payment_from_rule(const StepRule& rule, double v);

struct Outcome {
  Values x;
  Values p;
  double revenue = 0.0;
  Values u;
};

Outcome make_outcome(std::span<const double> values, Values x, Values p);

}  // namespace ccepe
