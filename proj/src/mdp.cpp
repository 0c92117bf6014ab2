#include "dbql/mdp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dbql/errors.hpp"
#include "dbql/rng.hpp"
#include "dbql/simd/kernels.hpp"

namespace dbql {

QTable::QTable(std::size_t n_states, std::size_t n_actions, double fill)
    : n_states_(n_states), n_actions_(n_actions), data_(n_states * n_actions, fill) {}

StateValues QTable::state_values() const {
  StateValues v(n_states_);
  for (std::size_t s = 0; s < n_states_; ++s) {
    const auto r = row(s);
    v[s] = *std::max_element(r.begin(), r.end());
  }
  return v;
}

std::size_t QTable::greedy_action(std::size_t s) const { return argmax(row(s)); }

std::size_t argmax(std::span<const double> values) {
  std::size_t best = 0;
  for (std::size_t a = 1; a < values.size(); ++a) {
    if (values[a] > values[best]) best = a;
  }
  return best;
}

StochasticPolicy::StochasticPolicy(std::size_t n_states, std::size_t n_actions,
                                   std::vector<double> probs)
    : n_states_(n_states), n_actions_(n_actions), probs_(std::move(probs)) {
  require(probs_.size() == n_states * n_actions, "policy: shape mismatch");
  for (std::size_t s = 0; s < n_states; ++s) {
    double sum = 0.0;
    for (std::size_t a = 0; a < n_actions; ++a) {
      const double p = probs_[s * n_actions + a];
      require(p >= 0.0 && std::isfinite(p), "policy: negative or non-finite probability");
      sum += p;
    }
    require(std::abs(sum - 1.0) <= 1e-12, "policy: row does not sum to 1");
  }
}

StochasticPolicy StochasticPolicy::deterministic(std::size_t n_actions,
                                                 std::span<const std::size_t> actions) {
  std::vector<double> probs(actions.size() * n_actions, 0.0);
  for (std::size_t s = 0; s < actions.size(); ++s) {
    require(actions[s] < n_actions, "policy: action out of range");
    probs[s * n_actions + actions[s]] = 1.0;
  }
  return StochasticPolicy(actions.size(), n_actions, std::move(probs));
}

StochasticPolicy StochasticPolicy::greedy(const QTable& q) {
  std::vector<std::size_t> actions(q.n_states());
  for (std::size_t s = 0; s < q.n_states(); ++s) actions[s] = q.greedy_action(s);
  return deterministic(q.n_actions(), actions);
}

TabularMdp::TabularMdp(std::size_t n_states, std::size_t n_actions,
                       std::vector<double> transition, std::vector<double> reward,
                       double discount)
    : n_states_(n_states),
      n_actions_(n_actions),
      transition_(std::move(transition)),
      reward_(std::move(reward)),
      discount_(discount) {
  require(n_states > 0 && n_actions > 0, "mdp: empty state or action space");
  require(transition_.size() == n_states * n_actions * n_states, "mdp: transition shape mismatch");
  require(reward_.size() == n_states * n_actions, "mdp: reward shape mismatch");
  require(std::isfinite(discount) && discount >= 0.0 && discount < 1.0,
          "mdp: discount must lie in [0, 1)");
  for (double r : reward_) require(std::isfinite(r), "mdp: non-finite reward");
  for (std::size_t sa = 0; sa < n_states * n_actions; ++sa) {
    double sum = 0.0;
    for (std::size_t n = 0; n < n_states; ++n) {
      const double p = transition_[sa * n_states + n];
      require(p >= 0.0 && std::isfinite(p), "mdp: negative or non-finite transition probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
      contract_fail("mdp: transition row " + std::to_string(sa) + " sums to " +
                    std::to_string(sum));
    }
  }
}

bool TabularMdp::is_absorbing(std::size_t s) const {
  for (std::size_t a = 0; a < n_actions_; ++a) {
    if (prob(s, a, s) != 1.0 || reward(s, a) != 0.0) return false;
  }
  return true;
}

void backup_into(const TabularMdp& mdp, std::span<const double> v, QTable& out) {
  require(v.size() == mdp.n_states(), "backup: value vector does not match state count");
  if (out.n_states() != mdp.n_states() || out.n_actions() != mdp.n_actions()) {
    out = QTable(mdp.n_states(), mdp.n_actions());
  }
  simd::kernels().affine_matvec(mdp.transition_flat().data(), mdp.n_states() * mdp.n_actions(),
                                mdp.n_states(), v.data(), mdp.reward_flat().data(),
                                mdp.discount(), out.flat().data());
}

QTable backup(const TabularMdp& mdp, std::span<const double> v) {
  QTable out(mdp.n_states(), mdp.n_actions());
  backup_into(mdp, v, out);
  return out;
}

QTable bellman_apply(const TabularMdp& mdp, const QTable& q) {
  require(q.n_states() == mdp.n_states() && q.n_actions() == mdp.n_actions(),
          "bellman_apply: table shape does not match the MDP");
  for (double x : q.flat()) require(std::isfinite(x), "bellman_apply: non-finite entry");
  const StateValues v = q.state_values();
  return backup(mdp, v);
}

StateValues optimal_values(const TabularMdp& mdp) {
  return policy_evaluation(mdp, value_iteration(mdp).greedy);
}

double sup_norm_diff(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), "sup_norm_diff: size mismatch");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

ValueIterationResult value_iteration(const TabularMdp& mdp, double tol) {
  require(tol > 0.0, "value_iteration: tol must be positive");
  QTable q(mdp.n_states(), mdp.n_actions(), 0.0);
  QTable next(mdp.n_states(), mdp.n_actions());
  StateValues v = q.state_values();
  std::size_t it = 0;
  double residual = 0.0;
  for (;; ++it) {
    backup_into(mdp, v, next);
    residual = sup_norm_diff(next.flat(), q.flat());
    if (residual <= tol) break;
    std::swap(q, next);
    v = q.state_values();
  }
  return {q, q.state_values(), StochasticPolicy::greedy(q), residual, it};
}

StateValues policy_evaluation(const TabularMdp& mdp, const StochasticPolicy& pi, double tol) {
  require(pi.n_states() == mdp.n_states() && pi.n_actions() == mdp.n_actions(),
          "policy_evaluation: policy shape does not match the MDP");
  const std::size_t n = mdp.n_states();
  const double g = mdp.discount();
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n),
                                                static_cast<Eigen::Index>(n));
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t s = 0; s < n; ++s) {
    for (std::size_t act = 0; act < mdp.n_actions(); ++act) {
      const double p = pi(s, act);
      if (p == 0.0) continue;
      rhs[static_cast<Eigen::Index>(s)] += p * mdp.reward(s, act);
      for (std::size_t nx = 0; nx < n; ++nx) {
        a(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(nx)) -=
            g * p * mdp.prob(s, act, nx);
      }
    }
  }
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  Eigen::VectorXd x = lu.solve(rhs);
  for (int refine = 0; refine < 8; ++refine) {
    const Eigen::VectorXd r = rhs - a * x;
    if (r.lpNorm<Eigen::Infinity>() <= tol * 1e-3) break;
    x += lu.solve(r);
  }
  return StateValues(x.data(), x.data() + x.size());
}

TabularMdp build_two_state_mdp() {
  // [s][a][s']
  std::vector<double> p = {1, 0, 0, 1,   // s0: a0 -> s0, a1 -> s1
                           0, 1, 0, 1};  // s1: both -> s1
  std::vector<double> r = {1.1, 1.0, 1.0, 1.0};
  return TabularMdp(2, 2, std::move(p), std::move(r), 0.99);
}

TabularMdp build_clipped_bad_case() {
  std::vector<double> p = {1, 0, 0, 1,   // s0: a0 self-loop, a1 -> sink
                           0, 1, 0, 1};  // sink
  std::vector<double> r = {1.35, 100.0, 0.0, 0.0};
  return TabularMdp(2, 2, std::move(p), std::move(r), 0.99);
}

TabularMdp random_mdp(std::size_t n_states, std::size_t n_actions, std::size_t branching,
                      std::uint64_t seed, double discount) {
  require(n_states > 0 && n_actions > 0, "random_mdp: empty state or action space");
  require(branching >= 1 && branching <= n_states, "random_mdp: branching must lie in [1, n_states]");
  RandomStream rng(seed);
  std::vector<double> p(n_states * n_actions * n_states, 0.0);
  std::vector<std::size_t> perm(n_states);
  std::vector<double> w(branching);
  for (std::size_t sa = 0; sa < n_states * n_actions; ++sa) {
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t k = 0; k < branching; ++k) {
      const std::size_t j = k + static_cast<std::size_t>(rng.below(n_states - k));
      std::swap(perm[k], perm[j]);
    }
    double total = 0.0;
    for (std::size_t k = 0; k < branching; ++k) {
      w[k] = 1.0 - rng.uniform01();
      total += w[k];
    }
    for (std::size_t k = 0; k < branching; ++k) p[sa * n_states + perm[k]] = w[k] / total;
  }
  std::vector<double> r(n_states * n_actions);
  for (double& x : r) x = rng.uniform01();
  return TabularMdp(n_states, n_actions, std::move(p), std::move(r), discount);
}

}  // namespace dbql
