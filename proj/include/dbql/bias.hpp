#pragma once

// Estimation bias of a stochastic operator viewed as an extra reward.

#include "dbql/fixed_point.hpp"

namespace dbql {

// E[(T~V)(s)] - (TV)(s), with (TV)(s) = max_a (TQ)(s, a).
double estimation_bias(const TabularMdp& mdp, const OperatorSpec& op, std::span<const double> v,
                       std::size_t s, const IntegrationSpec& integ = IntegrationSpec::quadrature());

// Same MDP with R(s, a) + bias(s) at every action. If v_fixed is a fixed
// point of E[T~V] then it is V* of the result.
TabularMdp modified_mdp_with_bias_rewards(const TabularMdp& mdp, const OperatorSpec& op,
                                          std::span<const double> v_fixed,
                                          const IntegrationSpec& integ = IntegrationSpec::quadrature());

}  // namespace dbql
