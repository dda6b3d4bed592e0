#include "ccepe/revcurve.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace ccepe {

Envelope concave_envelope(std::span<const Point> points, int n) {
  struct Tagged {
    double x;
    double y;
    std::size_t id;
  };
  constexpr std::size_t kOrigin = static_cast<std::size_t>(-1);

  double scale = 1.0;
  std::vector<Tagged> pts{{0.0, 0.0, kOrigin}};
  for (std::size_t k = 0; k < points.size(); ++k) {
    const auto& p = points[k];
    if (!(p.x >= 1.0 && p.x <= n) || p.x != std::floor(p.x)) {
      throw InputError("envelope points need integer abscissae in [1, n]");
    }
    pts.push_back({p.x, p.y, k});
    scale = std::max({scale, std::abs(p.x), std::abs(p.y)});
  }
  // Highest point per abscissa; stable so the first listed wins exact ties.
  std::stable_sort(pts.begin(), pts.end(), [](const Tagged& a, const Tagged& b) {
    return a.x < b.x || (a.x == b.x && a.y > b.y);
  });
  pts.erase(std::unique(pts.begin(), pts.end(), [](const Tagged& a, const Tagged& b) { return a.x == b.x; }),
            pts.end());

  const double eps = tol::kGrid * scale * scale;
  std::vector<Tagged> hull;
  for (const auto& p : pts) {
    while (hull.size() >= 2) {
      const auto& a = hull[hull.size() - 2];
      const auto& b = hull.back();
      const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
      if (cross < -eps) break;  // b is a strict corner
      hull.pop_back();
    }
    hull.push_back(p);
  }
  // Keep only the rising part: stop at the first vertex reaching the maximum height.
  std::size_t top = 0;
  for (std::size_t k = 1; k < hull.size(); ++k) {
    if (hull[k].y > hull[top].y + tol::kGrid * std::max(1.0, std::abs(hull[top].y))) top = k;
  }
  hull.resize(top + 1);

  Envelope env;
  env.curve.R.assign(n, 0.0);
  env.curve.phi.assign(n, 0.0);
  std::size_t seg = 0;
  for (int i = 1; i <= n; ++i) {
    while (seg + 1 < hull.size() && hull[seg + 1].x < i) ++seg;
    if (seg + 1 >= hull.size()) {
      env.curve.R[i - 1] = hull.back().y;
      env.curve.phi[i - 1] = 0.0;
      continue;
    }
    const auto& a = hull[seg];
    const auto& b = hull[seg + 1];
    const double slope = (b.y - a.y) / (b.x - a.x);
    env.curve.R[i - 1] = (i == b.x) ? b.y : a.y + slope * (i - a.x);
    env.curve.phi[i - 1] = slope;
  }
  for (const auto& h : hull) {
    if (h.id != kOrigin) env.vertices.push_back(h.id);
  }
  return env;
}

void validate_profile(std::span<const double> v, std::size_t min_size) {
  if (v.size() < min_size) {
    throw InputError("valuation profile needs at least " + std::to_string(min_size) + " agents");
  }
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i]) || v[i] < 0.0) throw InputError("values must be finite and nonnegative");
    if (i > 0 && v[i] > v[i - 1]) throw InputError("valuation profile must be non-increasing");
  }
}

RevenueCurve revenue_curve(std::span<const double> v) {
  validate_profile(v, 0);
  const int n = static_cast<int>(v.size());
  std::vector<Point> pts;
  pts.reserve(n);
  for (int i = 1; i <= n; ++i) pts.push_back({static_cast<double>(i), i * v[i - 1]});
  return concave_envelope(pts, n).curve;
}

Values virtual_values(std::span<const double> R) {
  Values phi(R.size());
  double prev = 0.0;
  for (std::size_t i = 0; i < R.size(); ++i) {
    phi[i] = R[i] - prev;
    prev = R[i];
  }
  return phi;
}

Values ef_payments(std::span<const double> x, std::span<const double> v) {
  if (x.size() != v.size()) throw InputError("allocation and profile lengths differ");
  for (std::size_t i = 0; i + 1 < x.size(); ++i) {
    if (x[i] < x[i + 1] - 1e-12) throw InputError("envy-free payments need a monotone allocation");
  }
  Values ef(x.size(), 0.0);
  double tail = 0.0;
  for (std::size_t i = x.size(); i-- > 0;) {
    const double next = i + 1 < x.size() ? x[i + 1] : 0.0;
    tail += v[i] * (x[i] - next);
    ef[i] = tail;
  }
  return ef;
}

EfoResult efo(std::span<const double> v, const Environment& env, const Mode& mode) {
  validate_profile(v, 2);
  if (static_cast<int>(v.size()) != env.n()) throw InputError("profile length must match environment size");
  const auto curve = revenue_curve(v);
  EfoResult out;
  out.x = allocation_by_rank(env, curve.phi, mode, TiePolicy::positive_only);
  for (std::size_t i = 0; i < v.size(); ++i) out.revenue += curve.phi[i] * out.x[i];
  return out;
}

Values truncated_profile(std::span<const double> v, int m) {
  if (m < 1 || m > static_cast<int>(v.size())) throw InputError("truncation index must lie in [1, n]");
  Values t(v.begin(), v.end());
  std::fill(t.begin(), t.begin() + m, v[m - 1]);
  return t;
}

double efo_benchmark2(std::span<const double> v, const Environment& env, const Mode& mode) {
  validate_profile(v, 2);
  return efo(truncated_profile(v, 2), env, mode).revenue;
}

double efo_truncated(std::span<const double> v, const Environment& env, int m, const Mode& mode) {
  validate_profile(v, 2);
  return efo(truncated_profile(v, m), env, mode).revenue;
}

double efo_contribution(std::span<const double> v, const Environment& env, std::span<const int> agents,
                        const Mode& mode) {
  const auto res = efo(v, env, mode);
  const auto ef = ef_payments(res.x, v);
  double total = 0.0;
  for (int i : agents) {
    if (i < 0 || i >= static_cast<int>(v.size())) throw InputError("agent index out of range");
    total += ef[i];
  }
  return total;
}

StepRule::StepRule(std::vector<Step> steps) : steps_(std::move(steps)) {
  double prev_level = 0.0;
  for (std::size_t k = 0; k < steps_.size(); ++k) {
    const auto& s = steps_[k];
    if (!(s.from >= 0.0) || !std::isfinite(s.from)) throw InputError("step breakpoints must be finite and >= 0");
    if (k > 0 && !(s.from > steps_[k - 1].from)) throw InputError("step breakpoints must be strictly increasing");
    if (s.level < prev_level - 1e-12) throw InputError("allocation rule must be nondecreasing");
    if (s.level < -1e-12 || s.level > 1.0 + 1e-12) throw InputError("allocation levels must lie in [0, 1]");
    prev_level = s.level;
  }
}

StepRule StepRule::unchecked(std::vector<Step> steps) {
  StepRule rule;
  rule.steps_ = std::move(steps);
  return rule;
}

double StepRule::at(double z) const {
  double level = 0.0;
  for (const auto& s : steps_) {
    if (s.from > z) break;
    level = s.level;
  }
  return level;
}

double StepRule::integral(double upto) const {
  double area = 0.0;
  for (std::size_t k = 0; k < steps_.size(); ++k) {
    const double lo = steps_[k].from;
    if (lo >= upto) break;
    const double hi = k + 1 < steps_.size() ? std::min(steps_[k + 1].from, upto) : upto;
    area += steps_[k].level * (hi - lo);
  }
  return area;
}

double ic_payment_from_rule(const StepRule& rule, double v) {
  if (!(v >= 0.0)) throw InputError("value must be nonnegative");
  return v * rule.at(v) - rule.integral(v);
}

Outcome make_outcome(std::span<const double> values, Values x, Values p) {
  Outcome o;
  o.u.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    o.revenue += p[i];
    o.u[i] = values[i] * x[i] - p[i];
  }
  o.x = std::move(x);
  o.p = std::move(p);
  return o;
}

}  // namespace ccepe
