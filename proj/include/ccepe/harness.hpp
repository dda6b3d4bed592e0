#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ccepe/io.hpp"
#include "ccepe/mechanisms.hpp"

namespace ccepe {

/// Valuation generator. Families: uniform on [lo, hi]; power_law (Pareto with
/// scale lo and tail `exponent`); bimodal (half near lo, half near hi); equal
/// (every value equals `value`). The number of agents is uniform on [n_min, n_max].
struct InstanceSpec {
  std::string family = "uniform";
  int n_min = 6;
  int n_max = 6;
  double lo = 1.0;
  double hi = 10.0;
  double exponent = 1.5;
  double value = 1.0;

  void validate() const;
  static InstanceSpec from_json(const json& j);
  json to_json() const;
};

/// Sorted non-increasing profile, deterministic in `seed`.
Values generate_profile(const InstanceSpec& spec, std::uint64_t seed);

struct Instance {
  Values values;
  Environment env;
};

/// Profile plus environment. Besides the kinds accepted by environment_from_json,
/// `env_spec` may be {"kind": "random_explicit", "sets": S, "max_size": K}, which
/// draws S random maximal sets of size at most K from the seed.
Instance generate_instance(const InstanceSpec& spec, const json& env_spec, std::uint64_t seed);

/// Random downward-closed system on n slots with up to `sets` maximal sets.
SetSystemRealization random_explicit_system(int n, int sets, int max_size, std::uint64_t seed);

/// Small random instance for property checks: values from a tie-heavy integer
/// grid, powers of two, or a continuous range (occasionally with zeros), and a
/// symmetric environment (digital goods, k-unit, or a permuted random explicit
/// system when `allow_explicit` and n <= 6).
Instance fuzz_instance(std::uint64_t seed, int n_min, int n_max, bool allow_explicit = true);

struct ExperimentConfig {
  json environment = {{"kind", "digital_goods"}};
  InstanceSpec instances;
  ConsensusParams params = ConsensusParams::tuned();
  MechanismKind mechanism = MechanismKind::ccepe;
  std::int64_t trials = 100;  // number of instances
  std::uint64_t seed = 0;
  std::string mode = "auto";  // auto | exact | monte_carlo
  std::int64_t mc_trials = 2000;
  std::string output;  // empty: <output dir>/experiment-<hash>.csv
  int workers = 1;

  /// Throws ConfigError on unknown keys or invalid values.
  static ExperimentConfig from_json(const json& j);
  json to_json() const;
  /// FNV-1a of the canonical JSON form.
  std::uint64_t hash() const;
};

struct ResultRow {
  std::int64_t id = 0;
  int n = 0;
  std::uint64_t instance_seed = 0;
  std::uint64_t mc_seed = 0;
  bool exact = true;
  double revenue = 0.0;
  double half_width = 0.0;
  double efo = 0.0;
  double efo2 = 0.0;
  /// Benchmark truncated at floor(mc); 0 when floor(mc) > n.
  double efo_mprime = 0.0;
  double ratio = 0.0;  // efo2 / revenue; 0 when both vanish
  double vickrey_share = 0.0;
  double sigma_mean = 0.0;
  /// The guarantee covers symmetric (permutation) environments only.
  bool bound_applies = true;
  bool bound_ok = true;
};

ResultRow evaluate_instance(const ExperimentConfig& config, std::int64_t id);

struct ExperimentSummary {
  std::string path;
  std::int64_t instances = 0;
  double mean_ratio = 0.0;
  double max_ratio = 0.0;
  double beta = 0.0;
  std::int64_t violations = 0;
};

/// Directory from CCEPE_OUTPUT_DIR, or "." when unset.
std::string default_output_dir();

/// Writes the CSV (comment header with hash and seeds, one row per instance, summary
/// comment) and returns the summary. Rows are ordered by instance id.
ExperimentSummary run_experiment(const ExperimentConfig& config);

void write_rows(std::ostream& out, const ExperimentConfig& config, const std::vector<ResultRow>& rows,
                const ExperimentSummary& summary);

/// Revenue-curve table: profile rows (i, i v_i, R_i, phi_i, R~_i, v~_i) and kept
/// point rows (j, n~_j, alpha^j n~_j).
void emit_curve(std::ostream& out, std::span<const double> v, const ConsensusParams& params, double sigma);

struct RatioRow {
  int n = 0;
  std::int64_t instances = 0;
  double mean_ratio = 0.0;
  double max_ratio = 0.0;
};

/// Mean and max benchmark ratio of `config` for every n in [n_lo, n_hi].
std::vector<RatioRow> ratio_sweep(ExperimentConfig config, int n_lo, int n_hi);

struct VerifyOptions {
  /// Random instances per property; 0 runs only the stored regression instances.
  std::int64_t budget = 200;
  std::uint64_t seed = 1;
  /// Negative control: checks an intentionally broken envelope.
  bool corrupt_envelope = false;
  /// Where the counterexample JSON is written on failure; empty disables dumping.
  std::string dump_dir;
};

struct VerifyReport {
  std::string suite;
  std::int64_t checks = 0;
  std::int64_t violations = 0;
  std::vector<std::string> messages;
  std::optional<json> counterexample;
  std::string dump_path;

  bool passed() const { return violations == 0; }
};

const std::vector<std::string>& suite_names();

/// Runs one property suite; throws ConfigError for an unknown suite name.
VerifyReport verify_suite(const std::string& suite, const VerifyOptions& options = {});

}  // namespace ccepe
