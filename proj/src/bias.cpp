#include "dbql/bias.hpp"

#include <algorithm>

#include "dbql/errors.hpp"

namespace dbql {

namespace {

std::vector<double> all_biases(const TabularMdp& mdp, const OperatorSpec& op,
                               std::span<const double> v, const IntegrationSpec& integ) {
  const StateValues expected = expected_operator(mdp, v, op, integ);
  const QTable x = backup(mdp, v);
  std::vector<double> bias(mdp.n_states());
  for (std::size_t s = 0; s < mdp.n_states(); ++s) {
    const auto row = x.row(s);
    bias[s] = expected[s] - *std::max_element(row.begin(), row.end());
  }
  return bias;
}

}  // namespace

double estimation_bias(const TabularMdp& mdp, const OperatorSpec& op, std::span<const double> v,
                       std::size_t s, const IntegrationSpec& integ) {
  require(s < mdp.n_states(), "estimation_bias: state out of range");
  return all_biases(mdp, op, v, integ)[s];
}

TabularMdp modified_mdp_with_bias_rewards(const TabularMdp& mdp, const OperatorSpec& op,
                                          std::span<const double> v_fixed,
                                          const IntegrationSpec& integ) {
  const std::vector<double> bias = all_biases(mdp, op, v_fixed, integ);
  std::vector<double> reward(mdp.reward_flat().begin(), mdp.reward_flat().end());
  const std::size_t na = mdp.n_actions();
  for (std::size_t s = 0; s < mdp.n_states(); ++s) {
    for (std::size_t a = 0; a < na; ++a) reward[s * na + a] += bias[s];
  }
  return TabularMdp(mdp.n_states(), na,
                    std::vector<double>(mdp.transition_flat().begin(), mdp.transition_flat().end()),
                    std::move(reward), mdp.discount());
}

}  // namespace dbql
