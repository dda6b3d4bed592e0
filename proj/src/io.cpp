#include "ccepe/io.hpp"

#include <cstdio>
#include <string>

namespace ccepe {
namespace {

int resolve_n(const json& j, int n) {
  if (j.contains("n")) {
    const int declared = j.at("n").get<int>();
    if (n >= 0 && declared != n) {
      throw ConfigError("environment declares n=" + std::to_string(declared) + " but the instance has n=" +
                        std::to_string(n));
    }
    return declared;
  }
  if (n < 0) throw ConfigError("environment needs an explicit \"n\"");
  return n;
}

json sets_to_json(const std::vector<Subset>& sets) {
  json out = json::array();
  for (const auto& s : sets) out.push_back(s);
  return out;
}

}  // namespace

Environment environment_from_json(const json& j, int n) {
  try {
    const auto kind = j.at("kind").get<std::string>();
    const bool permuted = j.value("permuted", false);
    if (kind == "digital_goods") return Environment(DigitalGoods{resolve_n(j, n)}, permuted);
    if (kind == "k_unit") return Environment(KUnit{resolve_n(j, n), j.at("k").get<int>()}, permuted);
    if (kind == "bipartite") {
      BipartiteMatching b;
      b.n = resolve_n(j, n);
      b.capacities = j.at("capacities").get<std::vector<int>>();
      b.adjacency = j.value("adjacency", std::vector<std::vector<int>>{});
      return Environment(b, permuted);
    }
    if (kind == "explicit") {
      const int size = resolve_n(j, n);
      auto sys = SetSystemRealization::from_maximal_sets(size, j.at("maximal_sets").get<std::vector<Subset>>());
      return Environment(ExplicitMixture{{{1.0, std::move(sys)}}}, permuted);
    }
    if (kind == "mixture") {
      const int size = resolve_n(j, n);
      ExplicitMixture mix;
      for (const auto& c : j.at("components")) {
        mix.components.emplace_back(c.at("weight").get<double>(),
                                    SetSystemRealization::from_maximal_sets(
                                        size, c.at("maximal_sets").get<std::vector<Subset>>()));
      }
      return Environment(std::move(mix), permuted);
    }
    throw ConfigError("unknown environment kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed environment: ") + e.what());
  } catch (const InputError& e) {
    throw ConfigError(std::string("invalid environment: ") + e.what());
  }
}

json environment_to_json(const Environment& env) {
  json j;
  std::visit(
      [&](const auto& k) {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, DigitalGoods>) {
          j = {{"kind", "digital_goods"}, {"n", k.n}};
        } else if constexpr (std::is_same_v<T, KUnit>) {
          j = {{"kind", "k_unit"}, {"n", k.n}, {"k", k.k}};
        } else if constexpr (std::is_same_v<T, BipartiteMatching>) {
          j = {{"kind", "bipartite"}, {"n", k.n}, {"capacities", k.capacities}, {"adjacency", k.adjacency}};
        } else {
          if (k.components.size() == 1) {
            j = {{"kind", "explicit"}, {"n", env.n()}, {"maximal_sets", sets_to_json(k.components[0].second.maximal_sets())}};
          } else {
            json comps = json::array();
            for (const auto& [w, sys] : k.components) {
              comps.push_back({{"weight", w}, {"maximal_sets", sets_to_json(sys.maximal_sets())}});
            }
            j = {{"kind", "mixture"}, {"n", env.n()}, {"components", comps}};
          }
        }
      },
      env.kind());
  j["permuted"] = env.permuted();
  return j;
}

ConsensusParams params_from_json(const json& j) {
  ConsensusParams p;
  try {
    p.c = j.value("c", p.c);
    p.alpha = j.value("alpha", p.alpha);
    p.m = j.value("m", p.m);
    p.p = j.value("p", p.p);
    p.validate();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed params: ") + e.what());
  } catch (const InputError& e) {
    throw ConfigError(std::string("invalid params: ") + e.what());
  }
  return p;
}

json params_to_json(const ConsensusParams& params) {
  return {{"c", params.c}, {"alpha", params.alpha}, {"m", params.m}, {"p", params.p}};
}

json result_to_json(const MechanismResult& res) {
  json j;
  j["arm"] = res.arm ? json(to_string(*res.arm)) : json("mixed");
  j["served"] = res.served;
  j["x"] = res.outcome.x;
  j["p"] = res.outcome.p;
  j["revenue"] = res.outcome.revenue;
  j["sigma"] = res.sigma;
  j["seeds"] = {{"tie", res.seeds.tie_seed}, {"perm", res.seeds.perm_seed}, {"mix", res.seeds.mix_seed}};
  if (res.diagnostics) {
    j["cross_checked"] = res.diagnostics->agents;
    j["estimate"] = res.diagnostics->estimate.values;
  }
  return j;
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace ccepe
