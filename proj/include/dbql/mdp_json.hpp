#pragma once

// JSON form of a TabularMdp.
//
//   {
//     "n_states": 2, "n_actions": 2, "discount": 0.99,
//     "reward": [[1.1, 1.0], [1.0, 1.0]],              // [state][action]
//     "transition": [[[1, 0], [0, 1]], [[0, 1], [0, 1]]] // [state][action][next]
//   }
//
// Instead of "transition" a document may carry "transition_sparse": a list of
// {"state": s, "action": a, "next": [[s', p], ...]} entries; pairs that are
// not listed are invalid (every row must be a distribution).

#include <json.hpp>

#include "dbql/mdp.hpp"

namespace dbql {

nlohmann::json mdp_to_json(const TabularMdp& mdp, bool sparse = false);

// Throws SchemaError on structural problems and on invalid probability rows.
TabularMdp mdp_from_json(const nlohmann::json& doc);

}  // namespace dbql
