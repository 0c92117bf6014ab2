#pragma once

// Empirical abstracted MDP built from experience, with conservative value
// iteration over observed actions only.
//
// Abstract states that were seen only as successors have no observed action;
// they are "unknown": their value counts as 0 inside backups and dp_target
// reports no target for transitions into them.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

namespace dbql {

using AbstractState = std::uint64_t;

// A state index (tabular environments) or a raw observation.
using Observation = std::variant<std::uint64_t, std::vector<std::uint8_t>>;

struct Transition {
  Observation state;
  std::size_t action = 0;
  double reward = 0.0;
  Observation next;
  bool terminal = false;

  static Transition tabular(std::uint64_t s, std::size_t a, double r, std::uint64_t next,
                            bool terminal = false);
};

class StateAbstraction {
 public:
  enum class Kind { identity, hashed };

  static StateAbstraction identity();
  // Two Rabin-Karp hashes, h = (h * base + byte + 1) mod prime over the
  // observation bytes; id = h1 * prime2 + h2. Collisions are not detected.
  static StateAbstraction hashed(std::uint64_t prime1 = 1000000007, std::uint64_t base1 = 5,
                                 std::uint64_t prime2 = 998244353, std::uint64_t base2 = 3);

  Kind kind() const noexcept { return kind_; }
  // Identity returns the index; hashed hashes its 8 little-endian bytes.
  AbstractState map(std::uint64_t index) const;
  // Hashed only; identity accepts state indices only.
  AbstractState map(std::span<const std::uint8_t> bytes) const;
  AbstractState map(const std::vector<std::uint8_t>& bytes) const {
    return map(std::span<const std::uint8_t>(bytes));
  }
  AbstractState map(const Observation& obs) const;

 private:
  StateAbstraction(Kind kind, std::uint64_t p1, std::uint64_t b1, std::uint64_t p2,
                   std::uint64_t b2)
      : kind_(kind), p1_(p1), b1_(b1), p2_(p2), b2_(b2) {}
  Kind kind_;
  std::uint64_t p1_, b1_, p2_, b2_;
};

struct ActionStats {
  std::uint64_t count = 0;
  double reward_sum = 0.0;
  std::uint64_t terminal_count = 0;
  std::map<AbstractState, std::uint64_t> successors;

  double reward_mean() const { return reward_sum / static_cast<double>(count); }
};

struct AbstractStateEntry {
  std::map<std::size_t, ActionStats> actions;
  double v_dp = 0.0;
};

class AbstractModel {
 public:
  // max_states = 0: unbounded. Entries are never evicted; once the table is
  // full, transitions that would create a new state are dropped.
  explicit AbstractModel(double discount, std::size_t max_states = 0);

  double discount() const noexcept { return discount_; }
  std::size_t max_states() const noexcept { return max_states_; }
  std::size_t n_states() const noexcept { return states_.size(); }
  std::size_t dropped() const noexcept { return dropped_; }
  std::size_t skipped_backups() const noexcept { return skipped_backups_; }

  // At least one observed action.
  bool known(AbstractState x) const;
  const AbstractStateEntry* find(AbstractState x) const;
  // 0 for unknown states.
  double value(AbstractState x) const;
  void set_value(AbstractState x, double v);
  const std::map<AbstractState, AbstractStateEntry>& states() const noexcept { return states_; }
  std::vector<AbstractState> known_states() const;

  // Empirical successor distribution of (x, a); a terminal outcome is
  // reported under no successor and appears in terminal_frequency.
  std::vector<std::pair<AbstractState, double>> successor_frequencies(AbstractState x,
                                                                      std::size_t a) const;
  double terminal_frequency(AbstractState x, std::size_t a) const;

  // Returns false when the sample was dropped (table full).
  bool ingest(AbstractState x, std::size_t a, double r, AbstractState next, bool terminal);
  // Empirical Q(x, a) = mean reward + gamma * sum freq * value(succ).
  double q_value(AbstractState x, std::size_t a) const;
  // Backup over observed actions; nullopt (and a counted diagnostic) for an
  // unknown state.
  std::optional<double> backup_state(AbstractState x);
  // Snapshot loading: install aggregated statistics / a value directly.
  void restore(AbstractState x, std::size_t a, ActionStats stats);
  void restore_value(AbstractState x, double v);

  friend bool operator==(const AbstractModel& a, const AbstractModel& b) {
    return a.discount_ == b.discount_ && a.max_states_ == b.max_states_ &&
           a.states_.size() == b.states_.size() && a.equal_states(b);
  }

 private:
  bool equal_states(const AbstractModel& other) const;
  AbstractStateEntry* slot(AbstractState x);

  double discount_;
  std::size_t max_states_;
  std::map<AbstractState, AbstractStateEntry> states_;
  std::size_t dropped_ = 0;
  std::size_t skipped_backups_ = 0;
};

bool ingest_transition(AbstractModel& model, const StateAbstraction& abs, const Transition& t);

std::optional<double> dp_backup_state(AbstractModel& model, AbstractState x);

// Backups along the trajectory, most recent state first. Returns the number
// of unknown states skipped.
std::size_t sweep_trajectory(AbstractModel& model, std::span<const AbstractState> trajectory);

// n synchronous Jacobi sweeps over all known states. Returns the sup-norm
// change of the last sweep.
double full_value_iteration_sweep(AbstractModel& model, std::size_t n_iterations);

// Synchronous sweeps until the change is at most tol or max_iterations.
// Returns the number of sweeps performed.
std::size_t solve_abstract_model(AbstractModel& model, double tol = 1e-10,
                                 std::size_t max_iterations = 1000000);

// r for terminal transitions, r + gamma * V_DP(phi(next)) for a known
// successor, nullopt otherwise.
std::optional<double> dp_target(const AbstractModel& model, const StateAbstraction& abs,
                                const Transition& t);

// Versioned JSON snapshot (schema "dbql.abstract_model", version 1).
nlohmann::json model_to_json(const AbstractModel& model);
AbstractModel model_from_json(const nlohmann::json& doc);

}  // namespace dbql
