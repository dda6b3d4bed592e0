#include "ccepe/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "ccepe/rng.hpp"

namespace ccepe {
namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& what) {
  if (!j.is_object()) throw ConfigError(what + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + what);
  }
}

std::string hex(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

bool exact_capable(const Environment& env) {
  if (env.n() <= 6 || !env.permuted()) return true;
  return std::all_of(env.components().begin(), env.components().end(),
                     [](const Environment::Component& c) { return c.system.symmetric(); });
}

template <typename Fn>
void parallel_for(std::int64_t count, int workers, Fn&& fn) {
  workers = std::max(1, std::min<int>(workers, static_cast<int>(std::max<std::int64_t>(count, 1))));
  std::atomic<std::int64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::int64_t id = next++; id < count; id = next++) {
      try {
        fn(id);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = count;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::vector<ResultRow> evaluate_all(const ExperimentConfig& config) {
  std::vector<ResultRow> rows(static_cast<std::size_t>(config.trials));
  parallel_for(config.trials, config.workers, [&](std::int64_t id) { rows[id] = evaluate_instance(config, id); });
  return rows;
}

ExperimentSummary summarize(const ExperimentConfig& config, const std::vector<ResultRow>& rows) {
  ExperimentSummary s;
  s.instances = static_cast<std::int64_t>(rows.size());
  s.beta = config.params.beta();
  double total = 0.0;
  for (const auto& r : rows) {
    total += r.ratio;
    s.max_ratio = std::max(s.max_ratio, r.ratio);
    if (!r.bound_ok) ++s.violations;
  }
  s.mean_ratio = rows.empty() ? 0.0 : total / static_cast<double>(rows.size());
  return s;
}

}  // namespace

void InstanceSpec::validate() const {
  static const std::set<std::string> families{"uniform", "power_law", "bimodal", "equal"};
  if (!families.count(family)) throw ConfigError("unknown instance family '" + family + "'");
  if (n_min < 1 || n_max < n_min) throw ConfigError("instance sizes need 1 <= n_min <= n_max");
  if (!(lo > 0.0) || !(hi >= lo) || !std::isfinite(hi)) throw ConfigError("value range needs 0 < lo <= hi");
  if (!(exponent > 0.0)) throw ConfigError("power-law exponent must be positive");
  if (!(value >= 0.0) || !std::isfinite(value)) throw ConfigError("equal value must be finite and nonnegative");
}

InstanceSpec InstanceSpec::from_json(const json& j) {
  check_keys(j, {"family", "n", "n_min", "n_max", "lo", "hi", "exponent", "value"}, "instances");
  InstanceSpec s;
  try {
    s.family = j.value("family", s.family);
    if (j.contains("n")) s.n_min = s.n_max = j.at("n").get<int>();
    s.n_min = j.value("n_min", s.n_min);
    s.n_max = j.value("n_max", s.n_max);
    s.lo = j.value("lo", s.lo);
    s.hi = j.value("hi", s.hi);
    s.exponent = j.value("exponent", s.exponent);
    s.value = j.value("value", s.value);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed instances: ") + e.what());
  }
  s.validate();
  return s;
}

json InstanceSpec::to_json() const {
  return {{"family", family}, {"n_min", n_min}, {"n_max", n_max}, {"lo", lo},
          {"hi", hi},         {"exponent", exponent}, {"value", value}};
}

Values generate_profile(const InstanceSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  const int n = spec.n_min + static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.n_max - spec.n_min + 1)));
  Values v(n);
  for (double& x : v) {
    if (spec.family == "uniform") {
      x = rng.uniform(spec.lo, spec.hi);
    } else if (spec.family == "power_law") {
      x = spec.lo * std::pow(1.0 - rng.uniform01(), -1.0 / spec.exponent);
    } else if (spec.family == "bimodal") {
      const double centre = rng.bernoulli(0.5) ? spec.hi : spec.lo;
      x = centre * rng.uniform(0.95, 1.05);
    } else {
      x = spec.value;
    }
  }
  std::sort(v.begin(), v.end(), std::greater<>());
  return v;
}

SetSystemRealization random_explicit_system(int n, int sets, int max_size, std::uint64_t seed) {
  if (n < 1 || sets < 1 || max_size < 1) throw ConfigError("random explicit systems need n, sets, max_size >= 1");
  Rng rng(seed);
  std::vector<Subset> out;
  std::vector<int> slots(n);
  for (int s = 0; s < sets; ++s) {
    std::iota(slots.begin(), slots.end(), 0);
    rng.shuffle(std::span<int>(slots));
    const int size = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min(n, max_size))));
    Subset set(slots.begin(), slots.begin() + size);
    std::sort(set.begin(), set.end());
    out.push_back(std::move(set));
  }
  return SetSystemRealization::from_maximal_sets(n, std::move(out));
}

Instance generate_instance(const InstanceSpec& spec, const json& env_spec, std::uint64_t seed) {
  auto values = generate_profile(spec, mix_seed(seed, 0));
  const int n = static_cast<int>(values.size());
  if (env_spec.value("kind", std::string()) == "random_explicit") {
    check_keys(env_spec, {"kind", "sets", "max_size", "permuted"}, "environment");
    auto sys = random_explicit_system(n, env_spec.value("sets", 3), env_spec.value("max_size", n), mix_seed(seed, 1));
    return {std::move(values), Environment(ExplicitMixture{{{1.0, std::move(sys)}}}, env_spec.value("permuted", true))};
  }
  return {std::move(values), environment_from_json(env_spec, n)};
}

Instance fuzz_instance(std::uint64_t seed, int n_min, int n_max, bool allow_explicit) {
  if (n_min < 1 || n_max < n_min) throw InputError("fuzz sizes need 1 <= n_min <= n_max");
  Rng rng(seed);
  const int n = n_min + static_cast<int>(rng.below(static_cast<std::uint64_t>(n_max - n_min + 1)));
  Values v(n);
  const auto family = rng.below(3);
  for (double& x : v) {
    if (family == 0) {
      x = static_cast<double>(1 + rng.below(6));
    } else if (family == 1) {
      x = std::ldexp(1.0, static_cast<int>(rng.below(5)));
    } else {
      x = rng.uniform(0.5, 10.0);
    }
    if (rng.bernoulli(0.05)) x = 0.0;
  }
  std::sort(v.begin(), v.end(), std::greater<>());
  const auto kinds = allow_explicit && n <= 6 ? 3 : 2;
  const auto kind = rng.below(kinds);
  if (kind == 0) return {std::move(v), Environment::digital_goods(n)};
  if (kind == 1) return {std::move(v), Environment::k_unit(n, 1 + static_cast<int>(rng.below(n)))};
  auto sys = random_explicit_system(n, 1 + static_cast<int>(rng.below(3)), n, rng.next());
  return {std::move(v), Environment(ExplicitMixture{{{1.0, std::move(sys)}}}, true)};
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  check_keys(j,
             {"environment", "instances", "params", "mechanism", "trials", "seed", "mode", "mc_trials", "output",
              "workers"},
             "config");
  ExperimentConfig c;
  try {
    if (j.contains("environment")) c.environment = j.at("environment");
    if (j.contains("instances")) c.instances = InstanceSpec::from_json(j.at("instances"));
    if (j.contains("params")) c.params = params_from_json(j.at("params"));
    if (j.contains("mechanism")) c.mechanism = parse_mechanism(j.at("mechanism").get<std::string>());
    c.trials = j.value("trials", c.trials);
    c.seed = j.value("seed", c.seed);
    c.mode = j.value("mode", c.mode);
    c.mc_trials = j.value("mc_trials", c.mc_trials);
    c.output = j.value("output", c.output);
    c.workers = j.value("workers", c.workers);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  if (c.trials < 0) throw ConfigError("trials must be nonnegative");
  if (c.mode != "auto" && c.mode != "exact" && c.mode != "monte_carlo") {
    throw ConfigError("mode must be auto, exact or monte_carlo");
  }
  if (c.mc_trials < 2) throw ConfigError("mc_trials must be at least 2");
  if (c.workers < 1) throw ConfigError("workers must be at least 1");
  const int min_n = c.mechanism == MechanismKind::pseudo_vickrey ? 2 : 3;
  if (c.instances.n_min < min_n) throw ConfigError("instances need at least " + std::to_string(min_n) + " agents");
  // Surface environment errors now rather than inside a worker.
  generate_instance(c.instances, c.environment, c.seed);
  return c;
}

json ExperimentConfig::to_json() const {
  // Output path and worker count do not affect results and stay out of the hash.
  return {{"environment", environment}, {"instances", instances.to_json()}, {"params", params_to_json(params)},
          {"mechanism", to_string(mechanism)}, {"trials", trials}, {"seed", seed}, {"mode", mode},
          {"mc_trials", mc_trials}};
}

std::uint64_t ExperimentConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json().dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ResultRow evaluate_instance(const ExperimentConfig& config, std::int64_t id) {
  ResultRow row;
  row.id = id;
  row.instance_seed = mix_seed(config.seed, static_cast<std::uint64_t>(id));
  row.mc_seed = mix_seed(row.instance_seed, 1000);
  const auto inst = generate_instance(config.instances, config.environment, row.instance_seed);
  const auto& v = inst.values;
  row.n = static_cast<int>(v.size());
  row.exact = config.mode == "exact" || (config.mode == "auto" && exact_capable(inst.env));
  const Mode mode = row.exact ? Mode{Exact{}} : Mode{MonteCarlo{config.mc_trials, row.mc_seed}};
  const Mode bench = row.exact ? Mode{Exact{}} : Mode{MonteCarlo{config.mc_trials, mix_seed(row.mc_seed, 1)}};

  const auto est = expected_revenue(config.mechanism, v, inst.env, config.params, mode);
  row.revenue = est.value;
  row.half_width = est.half_width;
  row.vickrey_share = est.vickrey_share;
  row.sigma_mean = est.sigma_mean;
  row.efo = efo(v, inst.env, bench).revenue;
  row.efo2 = efo_benchmark2(v, inst.env, bench);
  const int mp = config.params.m_prime();
  row.efo_mprime = mp <= row.n ? efo_truncated(v, inst.env, mp, bench) : 0.0;
  if (row.revenue > 0.0) {
    row.ratio = row.efo2 / row.revenue;
  } else {
    row.ratio = row.efo2 > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  row.bound_applies = inst.env.symmetric() && config.mechanism == MechanismKind::ccepe;
  row.bound_ok =
      !row.bound_applies || (row.revenue + row.half_width) * config.params.beta() >= row.efo2 * (1.0 - 1e-6);
  return row;
}

std::string default_output_dir() {
  const char* dir = std::getenv("CCEPE_OUTPUT_DIR");
  return dir != nullptr && *dir != '\0' ? dir : ".";
}

void write_rows(std::ostream& out, const ExperimentConfig& config, const std::vector<ResultRow>& rows,
                const ExperimentSummary& summary) {
  out << "# config_hash=" << hex(config.hash()) << "\n";
  out << "# seed=" << config.seed << " mode=" << config.mode << " mc_trials=" << config.mc_trials << "\n";
  out << "# config=" << config.to_json().dump() << "\n";
  out << "id,n,instance_seed,mc_seed,mode,revenue,half_width,efo,efo2,efo_mprime,ratio,vickrey_share,sigma_mean,"
         "bound_applies,bound_ok\n";
  for (const auto& r : rows) {
    out << r.id << ',' << r.n << ',' << r.instance_seed << ',' << r.mc_seed << ',' << (r.exact ? "exact" : "monte_carlo")
        << ',' << format_double(r.revenue) << ',' << format_double(r.half_width) << ',' << format_double(r.efo) << ','
        << format_double(r.efo2) << ',' << format_double(r.efo_mprime) << ',' << format_double(r.ratio) << ','
        << format_double(r.vickrey_share) << ',' << format_double(r.sigma_mean) << ',' << r.bound_applies << ','
        << r.bound_ok << "\n";
  }
  out << "# summary instances=" << summary.instances << " mean_ratio=" << format_double(summary.mean_ratio)
      << " max_ratio=" << format_double(summary.max_ratio) << " beta=" << format_double(summary.beta)
      << " violations=" << summary.violations << "\n";
}

ExperimentSummary run_experiment(const ExperimentConfig& config) {
  const auto rows = evaluate_all(config);
  auto summary = summarize(config, rows);
  summary.path = config.output.empty()
                     ? (std::filesystem::path(default_output_dir()) / ("experiment-" + hex(config.hash()) + ".csv"))
                           .string()
                     : config.output;
  const auto parent = std::filesystem::path(summary.path).parent_path();
  std::error_code ec;
  if (!parent.empty()) std::filesystem::create_directories(parent, ec);
  std::ofstream out(summary.path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write results to '" + summary.path + "'");
  write_rows(out, config, rows, summary);
  if (!out) throw std::runtime_error("write failed for '" + summary.path + "'");
  return summary;
}

void emit_curve(std::ostream& out, std::span<const double> v, const ConsensusParams& params, double sigma) {
  const auto curve = revenue_curve(v);
  const int n = static_cast<int>(v.size());
  const auto est = build_estimated_profile(sigma, v, params, n);
  out << "kind,i,iv,R,phi,R_est,v_est,j,n_est,q_height\n";
  for (int i = 1; i <= n; ++i) {
    out << "profile," << i << ',' << format_double(i * v[i - 1]) << ',' << format_double(curve.R[i - 1]) << ','
        << format_double(curve.phi[i - 1]) << ',' << format_double(est.curve.R[i - 1]) << ','
        << format_double(est.values[i - 1]) << ",,,\n";
  }
  for (const auto& q : est.kept) {
    out << "kept,,,,,,," << q.j << ',' << q.count << ',' << format_double(q.height) << "\n";
  }
}

std::vector<RatioRow> ratio_sweep(ExperimentConfig config, int n_lo, int n_hi) {
  if (n_lo < 3 || n_hi < n_lo) throw ConfigError("n-range needs 3 <= a <= b");
  std::vector<RatioRow> out;
  const auto base_seed = config.seed;
  for (int n = n_lo; n <= n_hi; ++n) {
    config.instances.n_min = config.instances.n_max = n;
    config.seed = mix_seed(base_seed, static_cast<std::uint64_t>(n));
    const auto s = summarize(config, evaluate_all(config));
    out.push_back({n, s.instances, s.mean_ratio, s.max_ratio});
  }
  return out;
}

}  // namespace ccepe
