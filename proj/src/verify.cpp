#include <algorithm>
#include <climits>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "ccepe/harness.hpp"
#include "ccepe/rng.hpp"

namespace ccepe {
namespace {

constexpr double kSlack = 1e-9;

std::string str(std::span<const double> v) {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << format_double(v[i]);
  out << ')';
  return out.str();
}

class Recorder {
 public:
  explicit Recorder(VerifyReport& report) : report_(report) {}

  void check(bool ok, const std::string& name, json instance, const std::string& detail) {
    ++report_.checks;
    if (ok) return;
    ++report_.violations;
    if (report_.messages.size() < 20) report_.messages.push_back(name + ": " + detail);
    // Keep the smallest failing instance as the counterexample.
    const int size = instance.contains("values") ? static_cast<int>(instance["values"].size()) : 0;
    if (size < best_size_) {
      best_size_ = size;
      instance["check"] = name;
      instance["detail"] = detail;
      report_.counterexample = std::move(instance);
    }
  }

 private:
  VerifyReport& report_;
  int best_size_ = INT_MAX;
};

json case_json(std::span<const double> v, const Environment& env) {
  return {{"values", Values(v.begin(), v.end())}, {"environment", environment_to_json(env)}};
}

bool near(double a, double b, double tol = kSlack) { return std::abs(a - b) <= tol * std::max(1.0, std::abs(b)); }

bool near_all(std::span<const double> a, std::span<const double> b, double tol = kSlack) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!near(a[i], b[i], tol)) return false;
  }
  return true;
}

double scale_of(std::span<const double> v) {
  double s = 1.0;
  for (double x : v) s = std::max(s, std::abs(x));
  return s;
}

// Envelope by brute force: max chord value at i, then the running maximum.
Values chord_envelope(std::span<const double> v) {
  const int n = static_cast<int>(v.size());
  Values y(n + 1, 0.0);
  for (int i = 1; i <= n; ++i) y[i] = i * v[i - 1];
  Values h(n + 1, 0.0);
  for (int i = 0; i <= n; ++i) {
    for (int a = 0; a <= i; ++a) {
      for (int b = i; b <= n; ++b) {
        const double val = a == b ? y[a] : y[a] + (y[b] - y[a]) * (i - a) / static_cast<double>(b - a);
        h[i] = std::max(h[i], val);
      }
    }
  }
  Values R(n);
  double run = 0.0;
  for (int i = 1; i <= n; ++i) {
    run = std::max(run, h[i]);
    R[i - 1] = run;
  }
  return R;
}

ConsensusParams random_params(Rng& rng) {
  ConsensusParams p;
  p.c = rng.uniform(1.2, 4.0);
  p.alpha = rng.uniform(1.2, 4.0);
  p.m = 1 + static_cast<int>(rng.below(3));
  p.p = rng.uniform(0.1, 0.9);
  return p;
}

Values random_profile(Rng& rng, int n) {
  Values v(n);
  const bool grid = rng.bernoulli(0.5);
  for (double& x : v) x = grid ? static_cast<double>(1 + rng.below(8)) : rng.uniform(0.1, 20.0);
  std::sort(v.begin(), v.end(), std::greater<>());
  return v;
}

// A non-increasing target dominated by v, sometimes touching it.
Values random_target(Rng& rng, std::span<const double> v) {
  Values t(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    t[i] = rng.bernoulli(0.3) ? v[i] : v[i] * rng.uniform01();
    if (i > 0) t[i] = std::min(t[i], t[i - 1]);
  }
  if (rng.bernoulli(0.3)) {
    const auto cut = rng.below(v.size() + 1);
    std::fill(t.begin() + static_cast<std::ptrdiff_t>(cut), t.end(), 0.0);
  }
  return t;
}

// Reports to try when probing incentive compatibility.
Values deviation_grid(std::span<const double> bids, std::span<const double> extra, double alpha) {
  std::set<double> pts{0.0};
  double hi = 0.0;
  double lo_pos = std::numeric_limits<double>::infinity();
  for (double b : bids) {
    pts.insert(b);
    hi = std::max(hi, b);
    if (b > 0.0) lo_pos = std::min(lo_pos, b);
  }
  for (double e : extra) pts.insert(e);
  if (hi > 0.0) {
    for (int j = floor_log(alpha, lo_pos) - 1; j <= floor_log(alpha, hi) + 1; ++j) pts.insert(std::pow(alpha, j));
  }
  pts.insert(hi + 1.0);
  Values grid(pts.begin(), pts.end());
  const std::size_t base = grid.size();
  for (std::size_t k = 0; k + 1 < base; ++k) grid.push_back(0.5 * (grid[k] + grid[k + 1]));
  return grid;
}

using OutcomeFn = std::function<Outcome(std::span<const double>)>;

// Largest gain any agent gets from a grid deviation, and where.
struct Gain {
  double gain = 0.0;
  int agent = -1;
  double report = 0.0;
};

Gain best_deviation(std::span<const double> values, const OutcomeFn& mech, std::span<const double> extra, double alpha) {
  const auto truth = mech(values);
  Gain best;
  Values bids(values.begin(), values.end());
  const auto grid = deviation_grid(values, extra, alpha);
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (double z : grid) {
      bids[i] = z;
      const auto dev = mech(bids);
      const double gain = (values[i] * dev.x[i] - dev.p[i]) - truth.u[i];
      if (gain > best.gain) best = {gain, static_cast<int>(i), z};
    }
    bids[i] = values[i];
  }
  return best;
}

double efo_mprime(std::span<const double> v, const Environment& env, int mp) {
  return mp <= static_cast<int>(v.size()) ? efo_truncated(v, env, mp) : 0.0;
}

// ---------------------------------------------------------------------------

void suite_payments(Recorder& rec, const VerifyOptions& opt) {
  const StepRule threshold({{2.0, 1.0}});
  rec.check(near(ic_payment_from_rule(threshold, 3.0), 2.0), "ic_threshold", {}, "expected 2");
  rec.check(near(ic_payment_from_rule(StepRule({{0.0, 1.0}}), 5.0), 0.0), "ic_constant", {}, "expected 0");
  rec.check(near(ic_payment_from_rule(StepRule({{1.0, 0.5}, {2.0, 1.0}}), 3.0), 1.5), "ic_two_steps", {},
            "expected 1.5");
  const Values v3{3, 2, 1};
  rec.check(near_all(ef_payments(Values{1, 0, 0}, v3), Values{3, 0, 0}), "ef_single", {}, "expected (3,0,0)");
  rec.check(near_all(ef_payments(Values{1, 1, 0}, v3), Values{2, 2, 0}), "ef_pair", {}, "expected (2,2,0)");
  rec.check(near_all(ef_payments(Values{1, 0.5, 0.5}, Values{2, 2, 1}), Values{1.5, 0.5, 0.5}), "ef_fractional", {},
            "expected (1.5,0.5,0.5)");
  // Incentive-compatible and envy-free payments differ on the same allocation.
  {
    const Values bids{3, 2};
    const auto pe = pe_outcome(Values{1, 1}, bids, Environment::digital_goods(2));
    const auto ef = ef_payments(pe.x, bids);
    rec.check(near_all(pe.p, Values{1, 1}) && near_all(ef, Values{2, 2}), "ic_vs_ef", {{"values", bids}},
              "IC " + str(pe.p) + " EF " + str(ef));
  }

  Rng rng(mix_seed(opt.seed, 11));
  for (std::int64_t t = 0; t < opt.budget; ++t) {
    // Payment identity against a fine midpoint quadrature.
    std::vector<StepRule::Step> steps;
    double from = rng.uniform(0.0, 1.0);
    double level = 0.0;
    const int count = 1 + static_cast<int>(rng.below(5));
    for (int k = 0; k < count; ++k) {
      level = std::min(1.0, level + rng.uniform(0.0, 0.5));
      steps.push_back({from, level});
      from += rng.uniform(0.1, 2.0);
    }
    const StepRule rule(steps);
    const double value = rng.uniform(0.0, from + 1.0);
    constexpr int kCells = 20000;
    const double h = value / kCells;
    double area = 0.0;
    for (int k = 0; k < kCells; ++k) area += rule.at((k + 0.5) * h) * h;
    const double quad = value * rule.at(value) - area;
    rec.check(std::abs(ic_payment_from_rule(rule, value) - quad) <= (count + 1) * h + 1e-9, "ic_quadrature",
              {{"value", value}}, "payment identity disagrees with quadrature");

    // Revenue identities under the optimal envy-free allocation.
    const auto inst = fuzz_instance(rng.next(), 2, 8);
    const auto& v = inst.values;
    const auto res = efo(v, inst.env);
    const auto curve = revenue_curve(v);
    const auto ef = ef_payments(res.x, v);
    double by_R = 0.0;
    double by_ef = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double next = i + 1 < v.size() ? res.x[i + 1] : 0.0;
      by_R += curve.R[i] * (res.x[i] - next);
      by_ef += ef[i];
    }
    rec.check(near(res.revenue, by_R), "efo_curve_identity", case_json(v, inst.env),
              "sum phi x=" + format_double(res.revenue) + " sum R dx=" + format_double(by_R));
    rec.check(near(res.revenue, by_ef), "efo_payment_identity", case_json(v, inst.env),
              "sum phi x=" + format_double(res.revenue) + " sum EF=" + format_double(by_ef));
    bool monotone = true;
    for (std::size_t i = 0; i + 1 < ef.size(); ++i) monotone = monotone && ef[i] >= ef[i + 1] - kSlack * scale_of(v);
    rec.check(monotone, "ef_monotone", case_json(v, inst.env), "EF payments increase with rank " + str(ef));
  }
}

void suite_envelope(Recorder& rec, const VerifyOptions& opt) {
  auto curve_of = [&](std::span<const double> v) {
    if (!opt.corrupt_envelope) return revenue_curve(v).R;
    Values raw(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) raw[i] = (i + 1) * v[i];
    return raw;
  };
  const std::vector<std::pair<Values, Values>> stored{
      {{1, 1}, {1, 2}}, {{3, 2, 1}, {3, 4, 4}}, {{5, 1}, {5, 5}}, {{2, 2, 1}, {2, 4, 4}}, {{4, 3, 2}, {4, 6, 6}}};
  for (const auto& [v, R] : stored) {
    const auto got = curve_of(v);
    rec.check(near_all(got, R), "envelope_regression", {{"values", v}}, "R=" + str(got) + " expected " + str(R));
  }
  Rng rng(mix_seed(opt.seed, 12));
  for (std::int64_t t = 0; t < opt.budget; ++t) {
    const auto v = random_profile(rng, 1 + static_cast<int>(rng.below(10)));
    const auto got = curve_of(v);
    const auto want = chord_envelope(v);
    rec.check(near_all(got, want), "envelope_oracle", {{"values", v}}, "R=" + str(got) + " oracle " + str(want));
    const auto curve = revenue_curve(v);
    bool shape = true;
    double prev = std::numeric_limits<double>::infinity();
    for (double phi : curve.phi) {
      shape = shape && phi >= -kSlack && phi <= prev + kSlack * scale_of(v);
      prev = phi;
    }
    rec.check(shape, "virtual_values_shape", {{"values", v}}, "phi=" + str(curve.phi));
  }
}

void suite_consensus(Recorder& rec, const VerifyOptions& opt) {
  rec.check(near(consensus_round(0.0, 5.0, 2.0), 4.0), "round_down", {}, "C(0,5)");
  rec.check(near(consensus_round(0.0, 8.0, 2.0), 8.0), "round_grid", {}, "C(0,8)");
  rec.check(near(consensus_round(0.5, 5.0, 2.0), std::pow(2.0, 1.5)), "round_shift", {}, "C(0.5,5)");
  const Values v531{5, 3, 1};
  rec.check(count_above(v531, 2.0, 1) == 2 && count_above(v531, 2.0, 0) == 3 && count_above(v531, 2.0, 3) == 0,
            "count_above", {}, "counts of (5,3,1)");
  const ConsensusParams p2{2.0, 2.0, 1, 0.5};
  {
    const Values v{4, 4, 4, 4, 1};
    const auto est = estimate_counts(0.0, v, ConsensusParams{2.0, 2.0, 2, 0.5});
    rec.check(est == std::map<int, int>{{0, 4}, {1, 4}, {2, 4}}, "estimate_counts", {{"values", v}}, "expected 4,4,4");
  }
  {
    Values v(16, 1.0);
    std::fill(v.begin(), v.begin() + 8, 4.0);
    const auto est = build_estimated_profile(0.0, v, p2);
    Values want(16, 0.0);
    std::fill(want.begin(), want.begin() + 8, 4.0);
    rec.check(near_all(est.values, want), "estimated_profile", {{"values", v}}, "v~=" + str(est.values));
    rec.check(!t_consensus_check(0.0, v, p2, 2, 2) && t_consensus_check(0.5, v, p2, 2, 2), "t_consensus",
              {{"values", v}}, "expected false at sigma 0 and true at 0.5");
  }
  {
    const Values v{4, 4, 1, 1};
    const auto est = build_estimated_profile(0.0, v, p2);
    rec.check(near_all(est.values, Values{4, 4, 0, 0}) && near_all(est.curve.R, Values{4, 8, 8, 8}),
              "estimated_profile_small", {{"values", v}}, "v~=" + str(est.values));
  }
  if (opt.budget == 0) return;

  const double rate = consensus_constancy_rate(4.0, 2.0, 100000, mix_seed(opt.seed, 13));
  rec.check(std::abs(rate - 0.5) <= 0.01, "constancy_rate", {{"rate", rate}}, "rate " + format_double(rate));

  Rng rng(mix_seed(opt.seed, 14));
  for (std::int64_t t = 0; t < opt.budget; ++t) {
    const auto params = random_params(rng);
    const auto v = random_profile(rng, 3 + static_cast<int>(rng.below(30)));
    const double sigma = rng.uniform01();
    const auto est = build_estimated_profile(sigma, v, params);
    json inst = {{"values", v}, {"sigma", sigma}, {"params", params_to_json(params)}};
    bool dominated = true;
    for (std::size_t i = 0; i < v.size(); ++i) dominated = dominated && est.values[i] <= v[i] * (1 + 1e-12);
    rec.check(dominated, "estimate_dominated", inst, "v~=" + str(est.values));
    const int mp = params.m_prime();
    if (mp <= static_cast<int>(v.size())) {
      const auto Rm = revenue_curve(truncated_profile(v, mp)).R;
      bool ratio_ok = true;
      for (std::size_t i = 0; i < v.size(); ++i) {
        ratio_ok = ratio_ok && est.curve.R[i] >= Rm[i] / (params.c * params.alpha) - kSlack * scale_of(Rm);
      }
      rec.check(ratio_ok, "curve_ratio", inst, "R~=" + str(est.curve.R) + " R^(m')=" + str(Rm));
    }
  }
}

void suite_crosscheck(Recorder& rec, const VerifyOptions& opt) {
  const ConsensusParams p2{2.0, 2.0, 1, 0.5};
  {
    const Values v(16, 1.0);
    const auto cc = cross_checked_estimate(0.0, v, p2);
    Values want(16, 0.0);
    std::fill(want.begin(), want.begin() + 8, 1.0);
    rec.check(cc.agents.size() == 16 && near_all(cc.estimate.values, want), "crosscheck_equal", {{"values", v}},
              "|I|=" + std::to_string(cc.agents.size()));
  }
  {
    const Values v{4, 4, 1};
    const auto cc = cross_checked_estimate(0.0, v, p2);
    rec.check(cc.agents == Subset{2} && near_all(cc.estimate.values, Values{4, 0, 0}), "crosscheck_small",
              {{"values", v}}, "expected I={2}");
  }
  Rng rng(mix_seed(opt.seed, 15));
  for (std::int64_t t = 0; t < opt.budget; ++t) {
    const auto params = random_params(rng);
    auto v = random_profile(rng, 3 + static_cast<int>(rng.below(10)));
    Rng shuffle_rng(rng.next());
    shuffle_rng.shuffle(std::span<double>(v));
    const double sigma = rng.uniform01();
    const int n = static_cast<int>(v.size());
    json inst = {{"values", v}, {"sigma", sigma}, {"params", params_to_json(params)}};
    const auto cc = cross_checked_estimate(sigma, v, params);

    // Every pair estimate, computed directly.
    std::vector<std::vector<std::vector<std::pair<int, int>>>> pair(n, std::vector<std::vector<std::pair<int, int>>>(n));
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        Values rest;
        for (int k = 0; k < n; ++k) {
          if (k != i && k != j) rest.push_back(v[k]);
        }
        pair[i][j] = pair[j][i] = build_estimated_profile(sigma, rest, params, n).blocks;
      }
    }
    Subset agents;
    for (int i = 0; i < n; ++i) {
      const int first = i == 0 ? 1 : 0;
      bool agree = true;
      for (int j = 0; j < n; ++j) agree = agree && (j == i || pair[i][j] == pair[i][first]);
      if (agree) agents.push_back(i);
    }
    rec.check(agents == cc.agents, "crosscheck_membership", inst, "library and direct I differ");
    if (!agents.empty() && agents == cc.agents) {
      const int i = agents.front();
      rec.check(pair[i][i == 0 ? 1 : 0] == cc.estimate.blocks, "crosscheck_estimate", inst, "estimate differs");
    }
    // Own-report independence.
    const int i = static_cast<int>(rng.below(n));
    auto mutated = v;
    mutated[i] = rng.bernoulli(0.2) ? 0.0 : rng.uniform(0.0, 40.0);
    const auto cc2 = cross_checked_estimate(sigma, mutated, params);
    const bool before = std::binary_search(cc.agents.begin(), cc.agents.end(), i);
    const bool after = std::binary_search(cc2.agents.begin(), cc2.agents.end(), i);
    rec.check(before == after && (!before || cc.estimate.blocks == cc2.estimate.blocks), "crosscheck_own_report",
              inst, "agent " + std::to_string(i) + " changes its membership or estimate by reporting " +
                        format_double(mutated[i]));
  }
}

void suite_pe(Recorder& rec, const VerifyOptions& opt) {
  const auto dg2 = Environment::digital_goods(2);
  {
    const auto out = pe_outcome(Values{2, 2}, Values{3, 2}, dg2);
    rec.check(near_all(out.p, Values{2, 2}) && near(out.revenue, 4.0), "pe_equal_target", {}, "p=" + str(out.p));
  }
  {
    const auto out = pe_outcome(Values{2, 1}, Values{3, 2}, dg2);
    rec.check(near_all(out.x, Values{1, 0}) && near_all(out.p, Values{2, 0}), "pe_positive_only", {},
              "p=" + str(out.p));
    const ProfitExtractor pool(Values{2, 1}, TiePolicy::pool);
    const auto pooled = pool.outcome(Values{3, 2}, dg2, Exact{});
    rec.check(near_all(pooled.x, Values{1, 0.5}) && near_all(pooled.p, Values{1.5, 0.5}), "pe_pool", {},
              "p=" + str(pooled.p));
  }
  rec.check(pe_outcome(Values{4, 0}, Values{3, 2}, dg2).revenue == 0.0, "pe_guard", {}, "guard must reject");
  rec.check(pe_served_set(Values{2, 2}, Values{3, 2}, SetSystemRealization::unconstrained(2), 0) == Subset{0, 1},
            "pe_served", {}, "expected both served");

  Rng rng(mix_seed(opt.seed, 16));
  for (std::int64_t t = 0; t < opt.budget; ++t) {
    const auto inst = fuzz_instance(rng.next(), 2, 6);
    const auto& v = inst.values;
    const auto target = random_target(rng, v);
    json cj = case_json(v, inst.env);
    cj["target"] = target;
    const auto out = pe_outcome(target, v, inst.env);
    const auto ef = ef_payments(efo(target, inst.env).x, target);
    bool dominance = true;
    for (std::size_t i = 0; i < v.size(); ++i) dominance = dominance && out.p[i] >= ef[i] - kSlack * scale_of(v);
    rec.check(dominance, "pe_dominance", cj, "p=" + str(out.p) + " EF=" + str(ef));

    const ProfitExtractor pe(target);
    const auto alloc = pe.rank_allocation(inst.env, Exact{});
    bool monotone = true;
    for (std::size_t i = 0; i < v.size(); ++i) {
      double prev = -1.0;
      const auto rule = pe.allocation_rule(v, static_cast<int>(i), alloc);
      for (const auto& s : rule.steps()) {
        monotone = monotone && s.level >= prev - 1e-12;
        prev = s.level;
      }
    }
    rec.check(monotone, "pe_monotone", cj, "allocation rule decreases");

    const auto gain = best_deviation(
        v, [&](std::span<const double> b) { return pe.outcome(b, alloc); }, target, 2.0);
    rec.check(gain.gain <= kSlack * scale_of(v), "pe_dsic", cj,
              "agent " + std::to_string(gain.agent) + " gains " + format_double(gain.gain));

    // Estimated targets: revenue covers the truncated benchmark up to c alpha.
    if (v.size() >= 2) {
      ConsensusParams params = random_params(rng);
      params.c = rng.uniform(1.2, 2.5);
      params.m = 1;
      const double sigma = rng.uniform01();
      const auto est = build_estimated_profile(sigma, v, params);
      const int mp = params.m_prime();
      if (mp <= static_cast<int>(v.size())) {
        const double rev = pe_outcome(est.values, v, inst.env).revenue;
        const double bench = efo_truncated(v, inst.env, mp);
        cj["sigma"] = sigma;
        cj["params"] = params_to_json(params);
        rec.check(rev >= bench / (params.c * params.alpha) - kSlack * scale_of(v), "pe_estimated_target", cj,
                  "revenue " + format_double(rev) + " benchmark " + format_double(bench));
      }
    }
  }
}

void suite_mechanisms(Recorder& rec, const VerifyOptions& opt) {
  rec.check(near(pseudo_vickrey(Values{3, 2}, Environment::digital_goods(2)).revenue, 2.0), "vickrey_dg", {},
            "expected 2");
  {
    const Environment empty(ExplicitMixture{{{1.0, SetSystemRealization::from_maximal_sets(2, {})}}});
    rec.check(pseudo_vickrey(Values{3, 2}, empty).revenue == 0.0, "vickrey_empty", {}, "expected 0");
  }
  {
    const Environment one(ExplicitMixture{{{1.0, SetSystemRealization::from_maximal_sets(3, {{0}})}}}, true);
    rec.check(near(pseudo_vickrey(Values{3, 2, 1}, one).revenue, 2.0 / 3.0), "vickrey_permuted", {},
              "expected 2/3");
  }
  {
    const auto res = ccepe_prime(Values{4, 4, 1}, Environment::digital_goods(3), {2.0, 2.0, 1, 0.5}, 0.0);
    rec.check(res.diagnostics->agents == Subset{2} && res.outcome.revenue == 0.0, "ccepe_prime_small", {},
              "expected I={2} and revenue 0");
  }

  Rng rng(mix_seed(opt.seed, 17));
  for (std::int64_t t = 0; t < opt.budget; ++t) {
    const auto inst = fuzz_instance(rng.next(), 3, 6);
    const auto& v = inst.values;
    auto params = random_params(rng);
    const double sigma = rng.uniform01();
    json cj = case_json(v, inst.env);
    cj["sigma"] = sigma;
    cj["params"] = params_to_json(params);

    const auto x2 = efo(truncated_profile(v, 2), inst.env).x;
    const double ef1 = ef_payments(x2, truncated_profile(v, 2))[0];
    const double vic = pseudo_vickrey(v, inst.env).revenue;
    rec.check(vic >= ef1 - kSlack * scale_of(v), "vickrey_top_payment", cj,
              "Vickrey " + format_double(vic) + " EF_1 " + format_double(ef1));

    const auto est = cross_checked_estimate(sigma, v, params).estimate.values;
    const auto prime_gain = best_deviation(
        v, [&](std::span<const double> b) { return ccepe_prime(b, inst.env, params, sigma).outcome; }, est,
        params.alpha);
    rec.check(prime_gain.gain <= kSlack * scale_of(v), "ccepe_prime_dsic", cj,
              "agent " + std::to_string(prime_gain.agent) + " gains " + format_double(prime_gain.gain) +
                  " reporting " + format_double(prime_gain.report));
    const auto mixed_gain = best_deviation(
        v, [&](std::span<const double> b) { return ccepe(b, inst.env, params, sigma).outcome; }, est, params.alpha);
    rec.check(mixed_gain.gain <= kSlack * scale_of(v), "ccepe_dsic", cj,
              "agent " + std::to_string(mixed_gain.agent) + " gains " + format_double(mixed_gain.gain));

    const double mixed = expected_outcome(MechanismKind::ccepe, v, inst.env, params).revenue;
    const double prime = expected_outcome(MechanismKind::ccepe_prime, v, inst.env, params).revenue;
    rec.check(near(mixed, params.p * vic + (1.0 - params.p) * prime), "mixture_identity", cj,
              "mixed " + format_double(mixed));
  }
  // Larger digital-goods profiles where the truncated benchmark is nontrivial.
  const auto cor = ConsensusParams::tuned();
  for (std::int64_t t = 0; t < std::min<std::int64_t>(opt.budget, 20); ++t) {
    const int n = cor.m_prime() + static_cast<int>(rng.below(60));
    const auto v = random_profile(rng, n);
    const auto env = Environment::digital_goods(n);
    const double prime = expected_outcome(MechanismKind::ccepe_prime, v, env, cor).revenue;
    const double bench = efo_mprime(v, env, cor.m_prime());
    rec.check(prime >= bench / cor.beta_prime() - kSlack * scale_of(v), "ccepe_prime_bound", case_json(v, env),
              "revenue " + format_double(prime) + " benchmark " + format_double(bench));
  }
}

void suite_endtoend(Recorder& rec, const VerifyOptions& opt) {
  const auto params = ConsensusParams::tuned();
  const double beta = params.beta();
  const int mp = params.m_prime();
  Rng rng(mix_seed(opt.seed, 18));
  auto check = [&](const Values& v, const Environment& env) {
    const double rev = expected_outcome(MechanismKind::ccepe, v, env, params).revenue;
    const double bench = efo_benchmark2(v, env);
    const json cj = case_json(v, env);
    rec.check(rev * beta >= bench * (1.0 - 1e-6), "ccepe_bound", cj,
              "revenue " + format_double(rev) + " EFO2 " + format_double(bench));
    const double vic = pseudo_vickrey(v, env).revenue;
    rec.check(bench <= mp * vic + efo_mprime(v, env, mp) + kSlack * scale_of(v), "benchmark_split", cj,
              "EFO2 " + format_double(bench) + " exceeds the split bound");
  };
  check(Values{3, 2, 1}, Environment::digital_goods(3));
  check(Values(20, 1.0), Environment::digital_goods(20));
  for (std::int64_t t = 0; t < opt.budget; ++t) {
    if (rng.bernoulli(0.7)) {
      const auto inst = fuzz_instance(rng.next(), 3, 6);
      check(inst.values, inst.env);
    } else {
      const int n = 3 + static_cast<int>(rng.below(120));
      check(random_profile(rng, n), Environment::digital_goods(n));
    }
  }
}

using SuiteFn = void (*)(Recorder&, const VerifyOptions&);

const std::map<std::string, SuiteFn>& suites() {
  static const std::map<std::string, SuiteFn> table{
      {"payments", suite_payments}, {"envelope", suite_envelope},     {"consensus", suite_consensus},
      {"crosscheck", suite_crosscheck}, {"pe", suite_pe},           {"mechanisms", suite_mechanisms},
      {"endtoend", suite_endtoend}};
  return table;
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"payments", "envelope", "consensus", "crosscheck",
                                              "pe",       "mechanisms", "endtoend"};
  return names;
}

VerifyReport verify_suite(const std::string& suite, const VerifyOptions& options) {
  const auto it = suites().find(suite);
  if (it == suites().end()) throw ConfigError("unknown suite '" + suite + "'");
  if (options.budget < 0) throw ConfigError("budget must be nonnegative");
  VerifyReport report;
  report.suite = suite;
  Recorder rec(report);
  it->second(rec, options);
  if (report.counterexample && !options.dump_dir.empty()) {
    std::filesystem::create_directories(options.dump_dir);
    report.dump_path = (std::filesystem::path(options.dump_dir) / ("counterexample-" + suite + ".json")).string();
    std::ofstream out(report.dump_path);
    if (!out) throw std::runtime_error("cannot write counterexample to '" + report.dump_path + "'");
    out << report.counterexample->dump(2) << "\n";
  }
  return report;
}

}  // namespace ccepe
