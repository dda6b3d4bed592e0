#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "ccepe/harness.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kViolation = 1;
constexpr int kConfigError = 2;

ccepe::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ccepe::ConfigError("cannot read '" + path + "'");
  try {
    return ccepe::json::parse(in);
  } catch (const ccepe::json::exception& e) {
    throw ccepe::ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

ccepe::Values read_profile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ccepe::ConfigError("cannot read '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') {
    try {
      return ccepe::json::parse(text).get<ccepe::Values>();
    } catch (const ccepe::json::exception& e) {
      throw ccepe::ConfigError("'" + path + "' is not a JSON number array: " + e.what());
    }
  }
  for (char& ch : text) {
    if (ch == ',') ch = ' ';
  }
  std::istringstream tokens(text);
  ccepe::Values v;
  std::string tok;
  while (tokens >> tok) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ccepe::ConfigError("'" + path + "': not a number: '" + tok + "'");
    }
  }
  return v;
}

// "c,alpha,m" or "c,alpha,m,p".
ccepe::ConsensusParams parse_params(const std::string& text) {
  std::vector<double> parts;
  std::istringstream in(text);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    try {
      parts.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw ccepe::ConfigError("--params expects numbers, got '" + tok + "'");
    }
  }
  if (parts.size() != 3 && parts.size() != 4) throw ccepe::ConfigError("--params expects c,alpha,m[,p]");
  ccepe::ConsensusParams p = ccepe::ConsensusParams::tuned();
  p.c = parts[0];
  p.alpha = parts[1];
  p.m = static_cast<int>(parts[2]);
  if (parts[2] != p.m) throw ccepe::ConfigError("m must be an integer");
  if (parts.size() == 4) p.p = parts[3];
  try {
    p.validate();
  } catch (const ccepe::InputError& e) {
    throw ccepe::ConfigError(e.what());
  }
  return p;
}

std::pair<int, int> parse_range(const std::string& text) {
  const auto dots = text.find("..");
  try {
    if (dots == std::string::npos) {
      const int n = std::stoi(text);
      return {n, n};
    }
    return {std::stoi(text.substr(0, dots)), std::stoi(text.substr(dots + 2))};
  } catch (const std::exception&) {
    throw ccepe::ConfigError("--n-range expects a..b, got '" + text + "'");
  }
}

std::ostream& open_output(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot write '" + path + "'");
  return file;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-checked consensus-estimate profit extraction: experiments and property checks"};
  app.require_subcommand(1);

  std::string config_path;
  std::string run_output;
  int run_workers = 0;
  auto* run = app.add_subcommand("run", "Run an experiment config and write a CSV of results");
  run->add_option("config", config_path, "Experiment config (JSON)")->required();
  run->add_option("-o,--output", run_output, "Output CSV (overrides the config)");
  run->add_option("-j,--workers", run_workers, "Worker threads (overrides the config)");

  std::string suite;
  ccepe::VerifyOptions vopt;
  vopt.dump_dir = ccepe::default_output_dir();
  auto* verify = app.add_subcommand("verify", "Run a property suite; exits 1 on any violation");
  verify->add_option("suite", suite, "Suite name or 'all'")->required();
  verify->add_option("--budget", vopt.budget, "Random instances per property (0: regression instances only)");
  verify->add_option("--seed", vopt.seed, "Fuzzing seed");
  verify->add_flag("--corrupt-envelope", vopt.corrupt_envelope, "Negative control: check a broken envelope");
  verify->add_option("--dump-dir", vopt.dump_dir, "Directory for counterexample JSON");

  std::string profile_path;
  double sigma = 0.0;
  std::string curve_params;
  std::string curve_output;
  auto* curve = app.add_subcommand("curve", "Emit the revenue curve and its consensus estimate as CSV");
  curve->add_option("profile", profile_path, "Values, non-increasing (whitespace/comma list or JSON array)")
      ->required();
  curve->add_option("--sigma", sigma, "Shared random shift in [0, 1)")->required();
  curve->add_option("--params", curve_params, "c,alpha,m")->required();
  curve->add_option("-o,--output", curve_output, "Output CSV (default stdout)");

  std::string ratio_params;
  std::string family = "uniform";
  std::string n_range;
  std::string env_text = R"({"kind": "digital_goods"})";
  std::int64_t instances = 20;
  std::uint64_t ratio_seed = 0;
  int ratio_workers = 1;
  std::string ratio_output;
  auto* ratio = app.add_subcommand("ratio", "Benchmark-to-revenue ratio sweep over n");
  ratio->add_option("--params", ratio_params, "c,alpha,m[,p]")->required();
  ratio->add_option("--family", family, "uniform | power_law | bimodal | equal");
  ratio->add_option("--n-range", n_range, "a..b")->required();
  ratio->add_option("--env", env_text, "Environment JSON");
  ratio->add_option("--instances", instances, "Instances per n");
  ratio->add_option("--seed", ratio_seed, "Base seed");
  ratio->add_option("-j,--workers", ratio_workers, "Worker threads");
  ratio->add_option("-o,--output", ratio_output, "Output CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (run->parsed()) {
      auto config = ccepe::ExperimentConfig::from_json(read_json_file(config_path));
      if (!run_output.empty()) config.output = run_output;
      if (run_workers > 0) config.workers = run_workers;
      const auto s = ccepe::run_experiment(config);
      std::cout << "wrote " << s.path << ": instances=" << s.instances << " mean_ratio=" << s.mean_ratio
                << " max_ratio=" << s.max_ratio << " beta=" << s.beta << " violations=" << s.violations << "\n";
      return s.violations == 0 ? kOk : kViolation;
    }
    if (verify->parsed()) {
      std::vector<std::string> names;
      if (suite == "all") {
        names = ccepe::suite_names();
      } else {
        names = {suite};
      }
      bool ok = true;
      for (const auto& name : names) {
        const auto rep = ccepe::verify_suite(name, vopt);
        std::cout << (rep.passed() ? "PASS " : "FAIL ") << name << ": " << rep.checks << " checks, "
                  << rep.violations << " violations\n";
        for (const auto& m : rep.messages) std::cout << "  " << m << "\n";
        if (rep.counterexample) {
          std::cout << "  counterexample: " << rep.counterexample->dump() << "\n";
          if (!rep.dump_path.empty()) std::cout << "  written to " << rep.dump_path << "\n";
        }
        ok = ok && rep.passed();
      }
      return ok ? kOk : kViolation;
    }
    if (curve->parsed()) {
      const auto v = read_profile(profile_path);
      const auto params = parse_params(curve_params);
      std::ofstream file;
      ccepe::emit_curve(open_output(curve_output, file), v, params, sigma);
      return kOk;
    }
    if (ratio->parsed()) {
      ccepe::ExperimentConfig config;
      config.params = parse_params(ratio_params);
      try {
        config.environment = ccepe::json::parse(env_text);
      } catch (const ccepe::json::exception& e) {
        throw ccepe::ConfigError(std::string("--env is not valid JSON: ") + e.what());
      }
      config.instances.family = family;
      config.instances.validate();
      config.trials = instances;
      config.seed = ratio_seed;
      config.workers = std::max(1, ratio_workers);
      const auto [lo, hi] = parse_range(n_range);
      const auto rows = ccepe::ratio_sweep(config, lo, hi);
      std::ofstream file;
      auto& out = open_output(ratio_output, file);
      out << "n,instances,mean_ratio,max_ratio,beta\n";
      bool ok = true;
      for (const auto& r : rows) {
        out << r.n << ',' << r.instances << ',' << ccepe::format_double(r.mean_ratio) << ','
            << ccepe::format_double(r.max_ratio) << ',' << ccepe::format_double(config.params.beta()) << "\n";
        ok = ok && r.max_ratio <= config.params.beta() * (1.0 + 1e-6);
      }
      return ok ? kOk : kViolation;
    }
  } catch (const ccepe::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const ccepe::InputError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigError;
  }
  return kOk;
}
