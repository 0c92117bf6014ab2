#pragma once

// Learning loops: the operator-level soft-update simulation, and a tabular
// agent with replay buffer, frozen target tables, noise-injected regression
// and an abstracted DP model.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dbql/abstracted_dp.hpp"
#include "dbql/mdp.hpp"
#include "dbql/noise.hpp"
#include "dbql/operators.hpp"
#include "dbql/rng.hpp"

namespace dbql {

struct SimulationConfig {
  OperatorSpec op = OperatorSpec::noisy_max(NoiseModel::zero());
  double alpha = 0.01;
  std::size_t n_iterations = 0;
  double initial_value = 0.0;
  StateValues initial_table;  // overrides initial_value when non-empty
  std::uint64_t seed = 0;

  void validate(const TabularMdp& mdp) const;
};

// round(1 / (alpha (1 - gamma))), at least 1.
std::size_t epoch_length(double alpha, double discount);

struct SimulationTrace {
  std::size_t epoch_length = 0;
  // epochs[k] is V after k epochs; epochs[0] is the initial table.
  std::vector<StateValues> epochs;
  StateValues final_v;
};

// V <- (1 - alpha) V + alpha * draw, n_iterations times.
SimulationTrace run_tabular_simulation(const TabularMdp& mdp, const SimulationConfig& cfg);

enum class TargetRule { q, double_q, clipped_double, db_adp, db_adp_c, adp_only, multistep };

const char* to_string(TargetRule rule);
std::optional<TargetRule> parse_target_rule(std::string_view name);

struct AgentConfig {
  TargetRule target_rule = TargetRule::double_q;
  NoiseModel noise = NoiseModel::zero();
  double exploration_rate = 0.1;
  std::size_t target_refresh_period = 100;
  std::size_t buffer_capacity = 10000;
  std::size_t multistep_horizon = 1;
  std::uint64_t seed = 0;
  // Tabular stand-ins for the parts of the deep agent that have no direct
  // analog: regression step size, mini-batch size, episode resets and
  // evaluation cadence.
  double learning_rate = 0.1;
  std::size_t batch_size = 32;
  std::size_t episode_length = 10;  // 0: never reset
  std::size_t start_state = 0;
  double initial_q = 0.0;
  std::size_t eval_period = 1000;

  void validate(const TabularMdp& mdp) const;
};

// Fixed-capacity FIFO ring of transitions with their episode id.
class ExperienceBuffer {
 public:
  struct Entry {
    Transition t;
    std::uint64_t episode;
  };

  explicit ExperienceBuffer(std::size_t capacity);

  void push(Transition t, std::uint64_t episode);
  std::size_t size() const noexcept { return size_; }
  std::size_t capacity() const noexcept { return ring_.size(); }
  std::uint64_t total_pushed() const noexcept { return pushed_; }
  // i = 0 is the oldest retained entry.
  const Entry& at(std::size_t i) const;
  std::size_t sample_index(RandomStream& rng) const;

 private:
  std::vector<Entry> ring_;
  std::size_t head_ = 0;  // next write slot
  std::size_t size_ = 0;
  std::uint64_t pushed_ = 0;
};

struct TargetTables {
  const QTable& live1;
  const QTable& live2;
  const QTable& frozen1;
  const QTable& frozen2;
};

struct TargetValue {
  std::optional<double> value;      // absent: transition skipped
  std::optional<double> bootstrap;  // the bootstrap part, when the rule has one
  std::optional<double> dp;         // y^DP, when available
};

// Target for one transition. For multistep, `continuation` holds the
// transitions that followed it in the same episode (at most horizon - 1, cut
// after a terminal one).
TargetValue compute_target(TargetRule rule, const TargetTables& tables, const AbstractModel& model,
                           const StateAbstraction& abs, const Transition& t, double discount,
                           std::span<const Transition> continuation = {});

// Bootstrap rule underlying a doubly bounded one (itself otherwise).
TargetRule bootstrap_rule(TargetRule rule);

struct Metrics {
  double estimation_error = 0.0;    // mean_s max_a Q - V*
  double policy_performance = 0.0;  // mean_s V^{greedy(Q)} - V*
};

Metrics evaluate_metrics(const TabularMdp& mdp, const QTable& q, std::span<const double> v_star);

struct CurveRow {
  std::size_t step;
  double greedy_return;  // V^{greedy}(start_state)
  double estimation_error;
  double policy_performance;
  bool policy_optimal;
};

struct AgentResult {
  std::vector<CurveRow> curve;
  QTable live1, live2, frozen1, frozen2;
  AbstractModel model;
  ExperienceBuffer buffer;
  Metrics metrics;
  // First evaluation step after which the greedy policy stays optimal.
  std::optional<std::size_t> steps_to_optimal;
  std::size_t skipped_targets = 0;
};

// One regression step on a batch: live_i(s, a) <- (1 - lr) live_i + lr (y + e_i).
// Noise for the whole batch is drawn in one call (e1 block, then e2 block).
// Returns the number of skipped transitions.
std::size_t regress_batch(const TabularMdp& mdp, const AgentConfig& cfg, TargetRule rule,
                          const ExperienceBuffer& buffer, std::span<const std::size_t> batch,
                          QTable& live1, QTable& live2, const QTable& frozen1,
                          const QTable& frozen2, const AbstractModel& model,
                          const StateAbstraction& abs, RandomStream& rng);

// Transitions following buffer entry i in its episode, up to horizon - 1.
std::vector<Transition> continuation_of(const ExperienceBuffer& buffer, std::size_t i,
                                        std::size_t horizon);

AgentResult run_learning_agent(const TabularMdp& env, const AgentConfig& cfg, std::size_t budget);

}  // namespace dbql
