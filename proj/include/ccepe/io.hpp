#pragma once

#include <json.hpp>

#include "ccepe/consensus.hpp"
#include "ccepe/envir.hpp"
#include "ccepe/mechanisms.hpp"

namespace ccepe {

using json = nlohmann::json;

/// Environment description. Digital goods and k-unit entries may omit "n"; it is
/// filled from `n` (pass -1 to require it).
///
///   {"kind": "digital_goods"}
///   {"kind": "k_unit", "k": 2}
///   {"kind": "bipartite", "capacities": [1, 2], "adjacency": [[0], [0, 1], [1]]}
///   {"kind": "explicit", "n": 3, "maximal_sets": [[0, 1], [2]]}
///   {"kind": "mixture", "n": 3, "components": [{"weight": 0.5, "maximal_sets": [[0]]}, ...]}
///   any of the above with "permuted": true
Environment environment_from_json(const json& j, int n = -1);
json environment_to_json(const Environment& env);

ConsensusParams params_from_json(const json& j);
json params_to_json(const ConsensusParams& params);

/// Arm, served set, allocation, payments, revenue, sigma and seeds.
json result_to_json(const MechanismResult& res);

/// Stable text form of a double that round-trips exactly.
std::string format_double(double x);

}  // namespace ccepe
