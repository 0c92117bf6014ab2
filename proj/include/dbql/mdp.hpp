#pragma once

// Finite MDPs and the exact Bellman machinery.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dbql {

using StateValues = std::vector<double>;

// Dense state-action table, row-major by state.
class QTable {
 public:
  QTable() = default;
  QTable(std::size_t n_states, std::size_t n_actions, double fill = 0.0);

  std::size_t n_states() const noexcept { return n_states_; }
  std::size_t n_actions() const noexcept { return n_actions_; }

  double& operator()(std::size_t s, std::size_t a) { return data_[s * n_actions_ + a]; }
  double operator()(std::size_t s, std::size_t a) const { return data_[s * n_actions_ + a]; }

  std::span<double> row(std::size_t s) { return {data_.data() + s * n_actions_, n_actions_}; }
  std::span<const double> row(std::size_t s) const {
    return {data_.data() + s * n_actions_, n_actions_};
  }
  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  // max_a q(s, a) for every state.
  StateValues state_values() const;
  // argmax_a q(s, a), lowest index on ties.
  std::size_t greedy_action(std::size_t s) const;

  friend bool operator==(const QTable&, const QTable&) = default;

 private:
  std::size_t n_states_ = 0;
  std::size_t n_actions_ = 0;
  std::vector<double> data_;
};

// Lowest index among the maxima.
std::size_t argmax(std::span<const double> values);

class StochasticPolicy {
 public:
  StochasticPolicy() = default;
  // probs row-major [state][action]; rows must be distributions.
  StochasticPolicy(std::size_t n_states, std::size_t n_actions, std::vector<double> probs);
  static StochasticPolicy deterministic(std::size_t n_actions, std::span<const std::size_t> actions);
  static StochasticPolicy greedy(const QTable& q);

  std::size_t n_states() const noexcept { return n_states_; }
  std::size_t n_actions() const noexcept { return n_actions_; }
  double operator()(std::size_t s, std::size_t a) const { return probs_[s * n_actions_ + a]; }
  std::span<const double> row(std::size_t s) const {
    return {probs_.data() + s * n_actions_, n_actions_};
  }

 private:
  std::size_t n_states_ = 0;
  std::size_t n_actions_ = 0;
  std::vector<double> probs_;
};

class TabularMdp {
 public:
  // transition is dense [s][a][s'], reward [s][a]. Validates row sums to
  // 1e-12, nonnegativity, finiteness and 0 <= discount < 1.
  TabularMdp(std::size_t n_states, std::size_t n_actions, std::vector<double> transition,
             std::vector<double> reward, double discount);

  std::size_t n_states() const noexcept { return n_states_; }
  std::size_t n_actions() const noexcept { return n_actions_; }
  double discount() const noexcept { return discount_; }

  double reward(std::size_t s, std::size_t a) const { return reward_[s * n_actions_ + a]; }
  double prob(std::size_t s, std::size_t a, std::size_t next) const {
    return transition_[(s * n_actions_ + a) * n_states_ + next];
  }
  std::span<const double> transition_row(std::size_t s, std::size_t a) const {
    return {transition_.data() + (s * n_actions_ + a) * n_states_, n_states_};
  }
  std::span<const double> transition_flat() const { return transition_; }
  std::span<const double> reward_flat() const { return reward_; }

  // Every action self-loops with probability 1 and reward 0.
  bool is_absorbing(std::size_t s) const;

  friend bool operator==(const TabularMdp&, const TabularMdp&) = default;

 private:
  std::size_t n_states_;
  std::size_t n_actions_;
  std::vector<double> transition_;
  std::vector<double> reward_;
  double discount_;
};

// (TQ)(s,a) computed from state values: R(s,a) + gamma * sum_s' P(s'|s,a) v(s').
QTable backup(const TabularMdp& mdp, std::span<const double> v);
// Same, into a preallocated table (hot loops).
void backup_into(const TabularMdp& mdp, std::span<const double> v, QTable& out);

// Bellman optimality operator on a Q-table.
QTable bellman_apply(const TabularMdp& mdp, const QTable& q);

struct ValueIterationResult {
  QTable q;
  StateValues v;
  StochasticPolicy greedy;
  double residual;
  std::size_t iterations;
};

// Iterates Q <- TQ until the sup-norm Bellman residual of the returned table
// is at most tol.
ValueIterationResult value_iteration(const TabularMdp& mdp, double tol = 1e-10);

// V^pi by a direct LU solve of (I - gamma P_pi) V = R_pi, followed by
// iterative refinement until the Bellman-expectation residual is below tol.
StateValues policy_evaluation(const TabularMdp& mdp, const StochasticPolicy& pi,
                              double tol = 1e-10);

// V* as the exact value of the greedy optimal policy. Metrics that compare a
// greedy policy's value against it then agree bit for bit when the policies
// coincide.
StateValues optimal_values(const TabularMdp& mdp);

double sup_norm_diff(std::span<const double> a, std::span<const double> b);

// Two states; s0: a0 self-loop reward 1.1, a1 -> s1 reward 1; s1: both actions
// self-loop reward 1; gamma 0.99.
TabularMdp build_two_state_mdp();

// One decision state s0 (a0 self-loop reward 1.35, a1 terminates with reward
// 100) plus an absorbing zero-reward sink standing in for termination.
TabularMdp build_clipped_bad_case();

// Random MDP: for every (s, a), `branching` distinct successors chosen by a
// partial Fisher-Yates shuffle, weights 1 - uniform01 in (0, 1], normalized;
// rewards uniform01 in [0, 1); gamma 0.99. Draw order: all transition rows in
// (s, a) order, then rewards.
TabularMdp random_mdp(std::size_t n_states, std::size_t n_actions, std::size_t branching,
                      std::uint64_t seed, double discount = 0.99);

}  // namespace dbql
