#ifndef MACA_ENVS_ENV_JSON_H_
#define MACA_ENVS_ENV_JSON_H_

#include <nlohmann/json.hpp>

#include "maca/envs/dec_pomdp.h"

namespace maca::envs {

// Full tabular form:
//   {"kind": "tabular", "name", "actions": [..], "num_states", "gamma",
//    "horizon", "initial": [..], "terminal": [..],
//    "observations": [[..] per (state, agent)],
//    "transitions": [{"state", "joint": [..], "next": [{"state", "p", "r"}]}],
//    "subset_table": [{"agents": [..], "actions": [..], "reward"}]  // optional
//   }
nlohmann::json ToJson(const DecPomdp& env);

// Accepts the tabular form above or a generator form:
//   {"kind": "subset_game", "n_agents", "num_actions", "horizon", "gamma",
//    "seed", "levels": [{"level", "count", "reward_lo", "reward_hi"}]}
//   {"kind": "subset_table", "n_agents", "num_actions", "horizon", "gamma",
//    "table": [{"agents", "actions", "reward"}]}
//   {"kind": "grid_capture", "width", "height", "n_agents", "n_targets",
//    "seed", "horizon"}
//   {"kind": "random_game", "actions": [..], "num_states", "horizon",
//    "gamma", "seed", "deterministic"}
// Throws std::invalid_argument on malformed input.
DecPomdp FromJson(const nlohmann::json& doc);

}  // namespace maca::envs

#endif  // MACA_ENVS_ENV_JSON_H_
