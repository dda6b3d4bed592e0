#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ccepe/harness.hpp"

namespace py = pybind11;
using namespace ccepe;

namespace {

Environment env_from(const std::string& spec, int n) { return environment_from_json(json::parse(spec), n); }

py::dict outcome_dict(const Outcome& o) {
  py::dict d;
  d["x"] = o.x;
  d["p"] = o.p;
  d["revenue"] = o.revenue;
  d["u"] = o.u;
  return d;
}

py::dict estimate_dict(const EstimatedProfile& e) {
  py::dict d;
  d["values"] = e.values;
  d["R"] = e.curve.R;
  d["phi"] = e.curve.phi;
  py::list kept;
  for (const auto& q : e.kept) kept.append(py::make_tuple(q.j, q.count, q.height));
  d["kept"] = kept;
  return d;
}

Mode mode_from(std::int64_t mc_trials, std::uint64_t seed) {
  if (mc_trials <= 0) return Exact{};
  return MonteCarlo{mc_trials, seed};
}

}  // namespace

PYBIND11_MODULE(_ccepe, m) {
  m.doc() = "Cross-checked consensus-estimate profit extraction";

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<CapacityError>(m, "CapacityError", PyExc_RuntimeError);

  py::class_<ConsensusParams>(m, "ConsensusParams")
      .def(py::init([](double c, double alpha, int m_, double p) {
             ConsensusParams params{c, alpha, m_, p};
             params.validate();
             return params;
           }),
           py::arg("c") = 2.0, py::arg("alpha") = 2.0, py::arg("m") = 1, py::arg("p") = 0.5)
      .def_readwrite("c", &ConsensusParams::c)
      .def_readwrite("alpha", &ConsensusParams::alpha)
      .def_readwrite("m", &ConsensusParams::m)
      .def_readwrite("p", &ConsensusParams::p)
      .def("m_prime", &ConsensusParams::m_prime)
      .def("beta_prime", &ConsensusParams::beta_prime)
      .def("beta", &ConsensusParams::beta)
      .def_static("tuned", &ConsensusParams::tuned)
      .def("__repr__", [](const ConsensusParams& p) {
        return "ConsensusParams(c=" + format_double(p.c) + ", alpha=" + format_double(p.alpha) +
               ", m=" + std::to_string(p.m) + ", p=" + format_double(p.p) + ")";
      });

  m.def(
      "revenue_curve",
      [](const Values& v) {
        const auto c = revenue_curve(v);
        return py::make_tuple(c.R, c.phi);
      },
      py::arg("values"), "(R, phi) of a non-increasing profile");

  m.def(
      "ef_payments", [](const Values& x, const Values& v) { return ef_payments(x, v); }, py::arg("x"),
      py::arg("values"));

  m.def(
      "efo", [](const Values& v, const std::string& env) { return efo(v, env_from(env, static_cast<int>(v.size()))).revenue; },
      py::arg("values"), py::arg("env"));
  m.def(
      "efo_benchmark2",
      [](const Values& v, const std::string& env) { return efo_benchmark2(v, env_from(env, static_cast<int>(v.size()))); },
      py::arg("values"), py::arg("env"));

  m.def("consensus_round", &consensus_round, py::arg("sigma"), py::arg("s"), py::arg("c"));

  m.def(
      "build_estimated_profile",
      [](double sigma, const Values& v, const ConsensusParams& params) {
        return estimate_dict(build_estimated_profile(sigma, v, params));
      },
      py::arg("sigma"), py::arg("values"), py::arg("params"));

  m.def(
      "cross_checked_estimate",
      [](double sigma, const Values& v, const ConsensusParams& params) {
        const auto cc = cross_checked_estimate(sigma, v, params);
        auto d = estimate_dict(cc.estimate);
        d["agents"] = cc.agents;
        return d;
      },
      py::arg("sigma"), py::arg("values"), py::arg("params"));

  m.def(
      "pe_outcome",
      [](const Values& target, const Values& bids, const std::string& env) {
        return outcome_dict(pe_outcome(target, bids, env_from(env, static_cast<int>(bids.size()))));
      },
      py::arg("target"), py::arg("bids"), py::arg("env"));

  m.def(
      "pseudo_vickrey",
      [](const Values& bids, const std::string& env) {
        return outcome_dict(pseudo_vickrey(bids, env_from(env, static_cast<int>(bids.size()))));
      },
      py::arg("bids"), py::arg("env"));

  m.def(
      "ccepe",
      [](const Values& bids, const std::string& env, const ConsensusParams& params, double sigma) {
        const auto res = ccepe::ccepe(bids, env_from(env, static_cast<int>(bids.size())), params, sigma);
        auto d = outcome_dict(res.outcome);
        d["agents"] = res.diagnostics->agents;
        d["estimate"] = res.diagnostics->estimate.values;
        return d;
      },
      py::arg("bids"), py::arg("env"), py::arg("params"), py::arg("sigma"), "p-mixture outcome at a fixed sigma");

  m.def(
      "run_ccepe",
      [](const Values& bids, const std::string& env, const ConsensusParams& params, double sigma,
         std::uint64_t tie_seed, std::uint64_t perm_seed, std::uint64_t mix_seed) {
        const auto res = run_ccepe(bids, env_from(env, static_cast<int>(bids.size())), params,
                                   SharedRandomness{sigma, tie_seed, perm_seed, mix_seed});
        return result_to_json(res).dump();
      },
      py::arg("bids"), py::arg("env"), py::arg("params"), py::arg("sigma"), py::arg("tie_seed") = 0,
      py::arg("perm_seed") = 0, py::arg("mix_seed") = 0, "One realized run, as a JSON record");

  m.def(
      "expected_revenue",
      [](const std::string& kind, const Values& bids, const std::string& env, const ConsensusParams& params,
         std::int64_t mc_trials, std::uint64_t seed) {
        const auto est = expected_revenue(parse_mechanism(kind), bids, env_from(env, static_cast<int>(bids.size())),
                                          params, mode_from(mc_trials, seed));
        return py::make_tuple(est.value, est.half_width);
      },
      py::arg("kind"), py::arg("bids"), py::arg("env"), py::arg("params"), py::arg("mc_trials") = 0,
      py::arg("seed") = 0, "(value, half_width); mc_trials=0 integrates exactly");

  m.def(
      "verify_suite",
      [](const std::string& suite, std::int64_t budget, std::uint64_t seed) {
        VerifyOptions opt;
        opt.budget = budget;
        opt.seed = seed;
        const auto rep = verify_suite(suite, opt);
        return py::make_tuple(rep.passed(), rep.checks, rep.violations);
      },
      py::arg("suite"), py::arg("budget") = 0, py::arg("seed") = 1);
}
