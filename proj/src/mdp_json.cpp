#include "dbql/mdp_json.hpp"

#include <string>

#include "dbql/errors.hpp"

namespace dbql {
namespace {

using nlohmann::json;

const json& field(const json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key)) {
    throw SchemaError(std::string("mdp: missing field '") + key + "'");
  }
  return doc.at(key);
}

std::size_t as_count(const json& v, const char* what) {
  if (!v.is_number_integer() || v.get<long long>() <= 0) {
    throw SchemaError(std::string("mdp: '") + what + "' must be a positive integer");
  }
  return v.get<std::size_t>();
}

double as_real(const json& v, const char* what) {
  if (!v.is_number()) throw SchemaError(std::string("mdp: '") + what + "' must be a number");
  return v.get<double>();
}

}  // namespace

json mdp_to_json(const TabularMdp& mdp, bool sparse) {
  json doc;
  doc["n_states"] = mdp.n_states();
  doc["n_actions"] = mdp.n_actions();
  doc["discount"] = mdp.discount();
  json reward = json::array();
  for (std::size_t s = 0; s < mdp.n_states(); ++s) {
    json row = json::array();
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) row.push_back(mdp.reward(s, a));
    reward.push_back(std::move(row));
  }
  doc["reward"] = std::move(reward);
  if (sparse) {
    json entries = json::array();
    for (std::size_t s = 0; s < mdp.n_states(); ++s) {
      for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
        json next = json::array();
        for (std::size_t n = 0; n < mdp.n_states(); ++n) {
          const double p = mdp.prob(s, a, n);
          if (p != 0.0) next.push_back(json::array({n, p}));
        }
        entries.push_back({{"state", s}, {"action", a}, {"next", std::move(next)}});
      }
    }
    doc["transition_sparse"] = std::move(entries);
  } else {
    json tr = json::array();
    for (std::size_t s = 0; s < mdp.n_states(); ++s) {
      json per_action = json::array();
      for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
        const auto row = mdp.transition_row(s, a);
        per_action.push_back(json(std::vector<double>(row.begin(), row.end())));
      }
      tr.push_back(std::move(per_action));
    }
    doc["transition"] = std::move(tr);
  }
  return doc;
}

TabularMdp mdp_from_json(const json& doc) {
  const std::size_t ns = as_count(field(doc, "n_states"), "n_states");
  const std::size_t na = as_count(field(doc, "n_actions"), "n_actions");
  const double gamma = as_real(field(doc, "discount"), "discount");

  const json& rw = field(doc, "reward");
  if (!rw.is_array() || rw.size() != ns) throw SchemaError("mdp: 'reward' must have n_states rows");
  std::vector<double> reward;
  reward.reserve(ns * na);
  for (const json& row : rw) {
    if (!row.is_array() || row.size() != na) {
      throw SchemaError("mdp: every 'reward' row must have n_actions entries");
    }
    for (const json& x : row) reward.push_back(as_real(x, "reward"));
  }

  std::vector<double> p(ns * na * ns, 0.0);
  const bool dense = doc.contains("transition");
  const bool sparse = doc.contains("transition_sparse");
  if (dense == sparse) {
    throw SchemaError("mdp: exactly one of 'transition' or 'transition_sparse' is required");
  }
  if (dense) {
    const json& tr = doc.at("transition");
    if (!tr.is_array() || tr.size() != ns) throw SchemaError("mdp: 'transition' must have n_states entries");
    for (std::size_t s = 0; s < ns; ++s) {
      if (!tr[s].is_array() || tr[s].size() != na) {
        throw SchemaError("mdp: every 'transition' entry must have n_actions rows");
      }
      for (std::size_t a = 0; a < na; ++a) {
        const json& row = tr[s][a];
        if (!row.is_array() || row.size() != ns) {
          throw SchemaError("mdp: every transition row must have n_states entries");
        }
        for (std::size_t n = 0; n < ns; ++n) p[(s * na + a) * ns + n] = as_real(row[n], "transition");
      }
    }
  } else {
    const json& entries = doc.at("transition_sparse");
    if (!entries.is_array()) throw SchemaError("mdp: 'transition_sparse' must be an array");
    for (const json& e : entries) {
      const std::size_t s = field(e, "state").get<std::size_t>();
      const std::size_t a = field(e, "action").get<std::size_t>();
      if (s >= ns || a >= na) throw SchemaError("mdp: sparse entry out of range");
      for (const json& pair : field(e, "next")) {
        if (!pair.is_array() || pair.size() != 2) throw SchemaError("mdp: sparse 'next' items are [state, p]");
        const std::size_t n = pair[0].get<std::size_t>();
        if (n >= ns) throw SchemaError("mdp: sparse successor out of range");
        p[(s * na + a) * ns + n] = as_real(pair[1], "transition");
      }
    }
  }
  try {
    return TabularMdp(ns, na, std::move(p), std::move(reward), gamma);
  } catch (const ContractViolation& e) {
    throw SchemaError(e.what());
  }
}

}  // namespace dbql
