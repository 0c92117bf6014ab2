#include "dbql/abstracted_dp.hpp"

#include <algorithm>
#include <cmath>

#include "dbql/errors.hpp"

namespace dbql {

Transition Transition::tabular(std::uint64_t s, std::size_t a, double r, std::uint64_t next,
                               bool terminal) {
  return Transition{s, a, r, next, terminal};
}

StateAbstraction StateAbstraction::identity() {
  return StateAbstraction(Kind::identity, 0, 0, 0, 0);
}

StateAbstraction StateAbstraction::hashed(std::uint64_t prime1, std::uint64_t base1,
                                          std::uint64_t prime2, std::uint64_t base2) {
  require(prime1 > 256 && prime2 > 256, "hashed abstraction: primes must exceed the byte range");
  require(prime1 < (1ULL << 31) && prime2 < (1ULL << 31),
          "hashed abstraction: primes must fit in 31 bits");
  require(base1 > 0 && base1 < prime1 && base2 > 0 && base2 < prime2,
          "hashed abstraction: bases must lie in (0, prime)");
  return StateAbstraction(Kind::hashed, prime1, base1, prime2, base2);
}

AbstractState StateAbstraction::map(std::uint64_t index) const {
  if (kind_ == Kind::identity) return index;
  std::uint8_t bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<std::uint8_t>(index >> (8 * i));
  return map(std::span<const std::uint8_t>(bytes, 8));
}

AbstractState StateAbstraction::map(std::span<const std::uint8_t> bytes) const {
  require(kind_ == Kind::hashed, "identity abstraction maps state indices only");
  std::uint64_t h1 = 0;
  std::uint64_t h2 = 0;
  for (std::uint8_t b : bytes) {
    h1 = (h1 * b1_ + b + 1) % p1_;
    h2 = (h2 * b2_ + b + 1) % p2_;
  }
  return h1 * p2_ + h2;
}

AbstractState StateAbstraction::map(const Observation& obs) const {
  if (const auto* index = std::get_if<std::uint64_t>(&obs)) return map(*index);
  return map(std::span<const std::uint8_t>(std::get<std::vector<std::uint8_t>>(obs)));
}

AbstractModel::AbstractModel(double discount, std::size_t max_states)
    : discount_(discount), max_states_(max_states) {
  require(discount >= 0.0 && discount < 1.0, "abstract model: discount must lie in [0, 1)");
}

bool AbstractModel::known(AbstractState x) const {
  const auto it = states_.find(x);
  return it != states_.end() && !it->second.actions.empty();
}

const AbstractStateEntry* AbstractModel::find(AbstractState x) const {
  const auto it = states_.find(x);
  return it == states_.end() ? nullptr : &it->second;
}

double AbstractModel::value(AbstractState x) const {
  const auto it = states_.find(x);
  return it == states_.end() || it->second.actions.empty() ? 0.0 : it->second.v_dp;
}

void AbstractModel::set_value(AbstractState x, double v) {
  require(std::isfinite(v), "abstract model: values must be finite");
  auto it = states_.find(x);
  require(it != states_.end(), "abstract model: set_value on an absent state");
  it->second.v_dp = v;
}

std::vector<AbstractState> AbstractModel::known_states() const {
  std::vector<AbstractState> out;
  for (const auto& [x, entry] : states_) {
    if (!entry.actions.empty()) out.push_back(x);
  }
  return out;
}

std::vector<std::pair<AbstractState, double>> AbstractModel::successor_frequencies(
    AbstractState x, std::size_t a) const {
  std::vector<std::pair<AbstractState, double>> out;
  const AbstractStateEntry* entry = find(x);
  if (!entry) return out;
  const auto it = entry->actions.find(a);
  if (it == entry->actions.end()) return out;
  const double n = static_cast<double>(it->second.count);
  for (const auto& [next, c] : it->second.successors) out.emplace_back(next, static_cast<double>(c) / n);
  return out;
}

double AbstractModel::terminal_frequency(AbstractState x, std::size_t a) const {
  const AbstractStateEntry* entry = find(x);
  if (!entry) return 0.0;
  const auto it = entry->actions.find(a);
  if (it == entry->actions.end()) return 0.0;
  return static_cast<double>(it->second.terminal_count) / static_cast<double>(it->second.count);
}

AbstractStateEntry* AbstractModel::slot(AbstractState x) {
  auto it = states_.find(x);
  if (it != states_.end()) return &it->second;
  if (max_states_ != 0 && states_.size() >= max_states_) return nullptr;
  return &states_[x];
}

bool AbstractModel::ingest(AbstractState x, std::size_t a, double r, AbstractState next,
                           bool terminal) {
  require(std::isfinite(r), "ingest: reward must be finite");
  const bool need_next = !terminal && states_.find(next) == states_.end();
  if (max_states_ != 0) {
    const std::size_t fresh = (states_.find(x) == states_.end() ? 1 : 0) +
                              (need_next && next != x ? 1 : 0);
    if (states_.size() + fresh > max_states_) {
      ++dropped_;
      return false;
    }
  }
  AbstractStateEntry* entry = slot(x);
  ActionStats& stats = entry->actions[a];
  stats.count += 1;
  stats.reward_sum += r;
  if (terminal) {
    stats.terminal_count += 1;
  } else {
    stats.successors[next] += 1;
    slot(next);
  }
  return true;
}

double AbstractModel::q_value(AbstractState x, std::size_t a) const {
  const AbstractStateEntry* entry = find(x);
  require(entry != nullptr, "q_value: unknown state");
  const auto it = entry->actions.find(a);
  require(it != entry->actions.end(), "q_value: action not observed");
  const ActionStats& st = it->second;
  const double n = static_cast<double>(st.count);
  double future = 0.0;
  for (const auto& [next, c] : st.successors) future += static_cast<double>(c) / n * value(next);
  return st.reward_mean() + discount_ * future;
}

std::optional<double> AbstractModel::backup_state(AbstractState x) {
  auto it = states_.find(x);
  if (it == states_.end() || it->second.actions.empty()) {
    ++skipped_backups_;
    return std::nullopt;
  }
  double best = -INFINITY;
  for (const auto& [a, st] : it->second.actions) best = std::max(best, q_value(x, a));
  it->second.v_dp = best;
  return best;
}

void AbstractModel::restore(AbstractState x, std::size_t a, ActionStats stats) {
  for (const auto& [next, c] : stats.successors) {
    (void)c;
    states_.try_emplace(next);
  }
  states_[x].actions[a] = std::move(stats);
}

void AbstractModel::restore_value(AbstractState x, double v) {
  require(std::isfinite(v), "abstract model: values must be finite");
  states_[x].v_dp = v;
}

bool AbstractModel::equal_states(const AbstractModel& other) const {
  auto a = states_.begin();
  auto b = other.states_.begin();
  for (; a != states_.end(); ++a, ++b) {
    if (a->first != b->first || a->second.v_dp != b->second.v_dp) return false;
    if (a->second.actions.size() != b->second.actions.size()) return false;
    auto x = a->second.actions.begin();
    auto y = b->second.actions.begin();
    for (; x != a->second.actions.end(); ++x, ++y) {
      if (x->first != y->first || x->second.count != y->second.count ||
          x->second.reward_sum != y->second.reward_sum ||
          x->second.terminal_count != y->second.terminal_count ||
          x->second.successors != y->second.successors) {
        return false;
      }
    }
  }
  return true;
}

bool ingest_transition(AbstractModel& model, const StateAbstraction& abs, const Transition& t) {
  const AbstractState x = abs.map(t.state);
  const AbstractState next = t.terminal ? 0 : abs.map(t.next);
  return model.ingest(x, t.action, t.reward, next, t.terminal);
}

std::optional<double> dp_backup_state(AbstractModel& model, AbstractState x) {
  return model.backup_state(x);
}

std::size_t sweep_trajectory(AbstractModel& model, std::span<const AbstractState> trajectory) {
  std::size_t skipped = 0;
  for (auto it = trajectory.rbegin(); it != trajectory.rend(); ++it) {
    if (!model.backup_state(*it)) ++skipped;
  }
  return skipped;
}

namespace {

// Known states compiled to flat arrays for repeated synchronous sweeps.
struct CompiledModel {
  std::vector<AbstractState> ids;
  std::vector<std::size_t> action_begin;  // per state, into q rows; size n+1
  std::vector<double> reward_mean;        // per (state, action)
  std::vector<std::size_t> succ_begin;    // per (state, action), size m+1
  std::vector<std::size_t> succ_index;    // into ids, or npos for unknown
  std::vector<double> succ_freq;
};

constexpr std::size_t kUnknown = static_cast<std::size_t>(-1);

CompiledModel compile(const AbstractModel& model) {
  CompiledModel c;
  c.ids = model.known_states();
  std::map<AbstractState, std::size_t> index;
  for (std::size_t i = 0; i < c.ids.size(); ++i) index[c.ids[i]] = i;
  c.action_begin.push_back(0);
  c.succ_begin.push_back(0);
  for (AbstractState x : c.ids) {
    const AbstractStateEntry& entry = *model.find(x);
    for (const auto& [a, st] : entry.actions) {
      c.reward_mean.push_back(st.reward_mean());
      const double n = static_cast<double>(st.count);
      for (const auto& [next, cnt] : st.successors) {
        const auto it = index.find(next);
        c.succ_index.push_back(it == index.end() ? kUnknown : it->second);
        c.succ_freq.push_back(static_cast<double>(cnt) / n);
      }
      c.succ_begin.push_back(c.succ_index.size());
    }
    c.action_begin.push_back(c.reward_mean.size());
  }
  return c;
}

double sweep_once(const CompiledModel& c, double gamma, const std::vector<double>& v,
                  std::vector<double>& out) {
  double change = 0.0;
  for (std::size_t i = 0; i < c.ids.size(); ++i) {
    double best = -INFINITY;
    for (std::size_t k = c.action_begin[i]; k < c.action_begin[i + 1]; ++k) {
      double future = 0.0;
      for (std::size_t j = c.succ_begin[k]; j < c.succ_begin[k + 1]; ++j) {
        const std::size_t t = c.succ_index[j];
        future += c.succ_freq[j] * (t == kUnknown ? 0.0 : v[t]);
      }
      best = std::max(best, c.reward_mean[k] + gamma * future);
    }
    out[i] = best;
    change = std::max(change, std::abs(best - v[i]));
  }
  return change;
}

std::vector<double> current_values(const AbstractModel& model, const CompiledModel& c) {
  std::vector<double> v(c.ids.size());
  for (std::size_t i = 0; i < c.ids.size(); ++i) v[i] = model.value(c.ids[i]);
  return v;
}

void store(AbstractModel& model, const CompiledModel& c, const std::vector<double>& v) {
  for (std::size_t i = 0; i < c.ids.size(); ++i) model.set_value(c.ids[i], v[i]);
}

}  // namespace

double full_value_iteration_sweep(AbstractModel& model, std::size_t n_iterations) {
  const CompiledModel c = compile(model);
  std::vector<double> v = current_values(model, c);
  std::vector<double> next(v.size());
  double change = 0.0;
  for (std::size_t it = 0; it < n_iterations; ++it) {
    change = sweep_once(c, model.discount(), v, next);
    v.swap(next);
  }
  store(model, c, v);
  return change;
}

std::size_t solve_abstract_model(AbstractModel& model, double tol, std::size_t max_iterations) {
  const CompiledModel c = compile(model);
  std::vector<double> v = current_values(model, c);
  std::vector<double> next(v.size());
  std::size_t it = 0;
  while (it < max_iterations) {
    const double change = sweep_once(c, model.discount(), v, next);
    v.swap(next);
    ++it;
    if (change <= tol) break;
  }
  store(model, c, v);
  return it;
}

std::optional<double> dp_target(const AbstractModel& model, const StateAbstraction& abs,
                                const Transition& t) {
  if (t.terminal) return t.reward;
  const AbstractState next = abs.map(t.next);
  if (!model.known(next)) return std::nullopt;
  return t.reward + model.discount() * model.value(next);
}

nlohmann::json model_to_json(const AbstractModel& model) {
  nlohmann::json states = nlohmann::json::array();
  for (const auto& [x, entry] : model.states()) {
    nlohmann::json actions = nlohmann::json::array();
    for (const auto& [a, st] : entry.actions) {
      nlohmann::json succ = nlohmann::json::array();
      for (const auto& [next, c] : st.successors) succ.push_back({next, c});
      actions.push_back({{"action", a},
                         {"count", st.count},
                         {"reward_sum", st.reward_sum},
                         {"terminal_count", st.terminal_count},
                         {"successors", succ}});
    }
    states.push_back({{"id", x}, {"v_dp", entry.v_dp}, {"actions", actions}});
  }
  return {{"schema", "dbql.abstract_model"},
          {"version", 1},
          {"discount", model.discount()},
          {"max_states", model.max_states()},
          {"states", states}};
}

AbstractModel model_from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("schema").get<std::string>() != "dbql.abstract_model") {
      throw SchemaError("abstract model: unexpected schema name");
    }
    if (doc.at("version").get<int>() != 1) {
      throw SchemaError("abstract model: unsupported schema version");
    }
    AbstractModel model(doc.at("discount").get<double>(), doc.at("max_states").get<std::size_t>());
    for (const auto& s : doc.at("states")) {
      const AbstractState x = s.at("id").get<AbstractState>();
      for (const auto& a : s.at("actions")) {
        const std::size_t action = a.at("action").get<std::size_t>();
        const std::uint64_t count = a.at("count").get<std::uint64_t>();
        const double reward_sum = a.at("reward_sum").get<double>();
        const std::uint64_t terminal = a.at("terminal_count").get<std::uint64_t>();
        std::uint64_t total = terminal;
        for (const auto& pair : a.at("successors")) total += pair.at(1).get<std::uint64_t>();
        if (total != count || count == 0) {
          throw SchemaError("abstract model: successor counts do not add up to the visit count");
        }
        ActionStats st;
        st.count = count;
        st.reward_sum = reward_sum;
        st.terminal_count = terminal;
        for (const auto& pair : a.at("successors")) {
          st.successors[pair.at(0).get<AbstractState>()] = pair.at(1).get<std::uint64_t>();
        }
        model.restore(x, action, std::move(st));
      }
      model.restore_value(x, s.at("v_dp").get<double>());
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("abstract model: ") + e.what());
  } catch (const ContractViolation& e) {
    throw SchemaError(std::string("abstract model: ") + e.what());
  }
}

}  // namespace dbql
