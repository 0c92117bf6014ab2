#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "dbql/errors.hpp"
#include "dbql/fixed_point.hpp"
#include "dbql/quadrature.hpp"

using namespace dbql;
using doctest::Approx;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

const NoiseModel kU1 = NoiseModel::uniform(1.0);

// Midpoint rule on the full (e1_0, e1_1, e2_selected) cube for two actions
// with Uniform(-eps, eps) noise. Independent of the conditional scheme.
double grid_oracle(OperatorKind kind, double x0, double x1, double eps, double floor, int m) {
  const double h = 2.0 * eps / m;
  double total = 0;
  for (int i = 0; i < m; ++i) {
    const double a = -eps + (i + 0.5) * h;
    for (int j = 0; j < m; ++j) {
      const double b = -eps + (j + 0.5) * h;
      const bool pick0 = x0 + a >= x1 + b;
      const double x = pick0 ? x0 : x1;
      const double e1 = pick0 ? a : b;
      if (kind == OperatorKind::noisy_max) {
        total += m * std::max(x + e1, floor);
        continue;
      }
      for (int k = 0; k < m; ++k) {
        const double c = -eps + (k + 0.5) * h;
        const double out = kind == OperatorKind::double_q ? x + c : std::min(x + e1, x + c);
        total += std::max(out, floor);
      }
    }
  }
  return total / (static_cast<double>(m) * m * m);
}

SearchResult solve_two_state_double() {
  return find_fixed_points(build_two_state_mdp(), OperatorSpec::double_q(kU1),
                           IntegrationSpec::quadrature(), SearchSpec{});
}

}  // namespace

TEST_SUITE("fixed_point") {

TEST_CASE("gauss-legendre rules") {
  const auto& r = quad::gauss_legendre(5);
  double w = 0;
  for (double x : r.weights) w += x;
  CHECK(w == Approx(2.0).epsilon(1e-14));
  // Exact through degree 9.
  double m8 = 0;
  for (std::size_t k = 0; k < 5; ++k) m8 += r.weights[k] * std::pow(r.nodes[k], 8);
  CHECK(m8 == Approx(2.0 / 9.0).epsilon(1e-13));
  const double breaks[] = {0.3, -4.0, 0.3, 0.7};
  auto edges = quad::panel_edges(0.0, 1.0, breaks);
  CHECK(edges == std::vector<double>{0.0, 0.3, 0.7, 1.0});
  const double kink[] = {0.3};
  CHECK(quad::integrate([](double x) { return std::abs(x - 0.3); }, 0.0, 1.0, kink, 4) ==
        Approx(0.045 + 0.245).epsilon(1e-14));
}

TEST_CASE("integration spec validation") {
  CHECK_THROWS_AS(IntegrationSpec::quadrature(1).validate(), ContractViolation);
  CHECK(IntegrationSpec::quadrature(16).refined().nodes_or_samples == 32);
  CHECK(IntegrationSpec::monte_carlo(100, 3).refined().seed == 3);
}

TEST_CASE("quadrature matches the grid oracle on two actions") {
  const double xs[][2] = {{0.0, 0.0}, {0.3, -0.2}, {1.7, 0.1}, {-0.4, 0.9}};
  const double floors[] = {kNegInf, 0.25};
  for (const auto& x : xs) {
    for (double f : floors) {
      for (auto kind : {OperatorKind::noisy_max, OperatorKind::double_q, OperatorKind::clipped_double}) {
        OperatorSpec inner = kind == OperatorKind::noisy_max ? OperatorSpec::noisy_max(kU1)
                             : kind == OperatorKind::double_q ? OperatorSpec::double_q(kU1)
                                                              : OperatorSpec::clipped_double(kU1);
        const OperatorSpec op =
            std::isinf(f) ? inner : OperatorSpec::doubly_bounded(inner, {f});
        const double q = expected_state_output(op, x, f, IntegrationSpec::quadrature());
        const double g = grid_oracle(kind, x[0], x[1], 1.0, f, 240);
        CAPTURE(x[0]);
        CAPTURE(x[1]);
        CAPTURE(f);
        CHECK(std::abs(q - g) < 2e-3);
      }
    }
  }
}

TEST_CASE("closed forms for one and two actions") {
  const double one[] = {2.0};
  CHECK(expected_state_output(OperatorSpec::clipped_double(kU1), one, 0, IntegrationSpec::quadrature()) ==
        Approx(2.0 - 1.0 / 3.0).epsilon(1e-12));
  CHECK(expected_state_output(OperatorSpec::noisy_max(kU1), one, 0, IntegrationSpec::quadrature()) ==
        Approx(2.0).epsilon(1e-12));
  const double tie[] = {0.0, 0.0};
  CHECK(expected_state_output(OperatorSpec::noisy_max(kU1), tie, 0, IntegrationSpec::quadrature()) ==
        Approx(1.0 / 3.0).epsilon(1e-12));
  // Gaussian: E[max of two iid N(0, s^2)] = s / sqrt(pi).
  const NoiseModel g = NoiseModel::gaussian(0.5);
  CHECK(expected_state_output(OperatorSpec::noisy_max(g), tie, 0, IntegrationSpec::quadrature()) ==
        Approx(0.5 / std::sqrt(M_PI)).epsilon(1e-10));
  CHECK(expected_state_output(OperatorSpec::clipped_double(g), one, 0, IntegrationSpec::quadrature()) ==
        Approx(2.0 - 0.5 / std::sqrt(M_PI)).epsilon(1e-10));
  auto p = selection_probabilities(tie, g, IntegrationSpec::quadrature());
  CHECK(p[0] == Approx(0.5).epsilon(1e-12));
  const double three[] = {0.0, 0.0, 0.0};
  for (double pi : selection_probabilities(three, kU1, IntegrationSpec::quadrature()))
    CHECK(pi == Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("monte carlo agrees with quadrature for many actions") {
  RandomStream rng(21);
  for (int t = 0; t < 6; ++t) {
    std::vector<double> x(5);
    rng.fill_uniform(x, -1.0, 1.0);
    const NoiseModel noise = t % 2 ? NoiseModel::gaussian(0.7) : NoiseModel::uniform(0.8);
    for (const OperatorSpec& op : {OperatorSpec::noisy_max(noise), OperatorSpec::double_q(noise),
                                   OperatorSpec::clipped_double(noise)}) {
      const double q = expected_state_output(op, x, 0, IntegrationSpec::quadrature());
      const double m = expected_state_output(op, x, 0, IntegrationSpec::monte_carlo(400000, t));
      CHECK(std::abs(q - m) < 0.01);
    }
  }
}

TEST_CASE("expected operator examples") {
  const TabularMdp mdp = build_two_state_mdp();
  const auto integ = IntegrationSpec::quadrature();
  for (const OperatorSpec& op : {OperatorSpec::noisy_max(NoiseModel::zero()),
                                 OperatorSpec::double_q(NoiseModel::zero()),
                                 OperatorSpec::clipped_double(NoiseModel::zero())}) {
    const StateValues v{100.3, 99.0};
    CHECK(expected_operator(mdp, v, op, integ) == backup(mdp, v).state_values());
  }
  const OperatorSpec dq = OperatorSpec::double_q(kU1);
  CHECK(expected_operator(mdp, StateValues{110.0, 100.0}, dq, integ)[0] == Approx(110.0).epsilon(1e-12));
  const auto sol = solve_two_state_double();
  REQUIRE(sol.solutions.size() == 3);
  const StateValues low = sol.solutions[0].v;
  CHECK(std::abs(expected_operator(mdp, low, dq, integ)[0] - low[0]) < 1e-3);
  CHECK(std::abs(low[0] - 100.162) < 1e-3);
}

TEST_CASE("double-Q fixed points on the two-state MDP") {
  const TabularMdp mdp = build_two_state_mdp();
  const auto res = solve_two_state_double();
  REQUIRE(res.solutions.size() == 3);
  const double v0[] = {100.162, 101.159, 110.0};
  const double p0[] = {0.622, 0.929, 1.0};
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& s = res.solutions[i];
    CHECK(std::abs(s.v[0] - v0[i]) < 0.01);
    CHECK(std::abs(s.v[1] - 100.0) < 0.001);
    CHECK(std::abs(s.induced_policy(0, 0) - p0[i]) < 0.005);
    CHECK(s.residual <= 1e-9);
    CHECK(s.recheck_residual <= 2e-9);
    for (std::size_t st = 0; st < 2; ++st) {
      CHECK(s.induced_policy(st, 0) + s.induced_policy(st, 1) == Approx(1.0).epsilon(1e-12));
    }
  }
  CHECK(res.solutions[0].classification == Classification::non_optimal);
  CHECK(res.solutions[1].classification == Classification::non_optimal);
  CHECK(res.solutions[2].classification == Classification::optimal);
  CHECK(verify_fixed_point_as_policy_value(mdp, res.solutions[0]) < 0.05);
  CHECK(verify_fixed_point_as_policy_value(mdp, res.solutions[1]) < 0.05);
  CHECK(verify_fixed_point_as_policy_value(mdp, res.solutions[2]) < 0.01);
}

TEST_CASE("clipped-double fixed points on the bad case") {
  // Exact roots: closed-form piecewise-polynomial oracle, checked separately
  // by a one-dimensional scan with a bracketing root finder.
  const auto res = find_fixed_points(build_clipped_bad_case(), OperatorSpec::clipped_double(kU1),
                                     IntegrationSpec::quadrature(), SearchSpec{});
  REQUIRE(res.solutions.size() == 3);
  const double v0[] = {100.23809, 101.58010, 101.66667};
  const double p0[] = {0.75, 0.9991, 1.0};
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(std::abs(res.solutions[i].v[0] - v0[i]) < 1e-4);
    CHECK(res.solutions[i].v[1] == 0.0);
    CHECK(std::abs(res.solutions[i].induced_policy(0, 0) - p0[i]) < 1e-3);
  }
  // The highest root is (1.35 - 1/3) / 0.01 exactly.
  CHECK(res.solutions[2].v[0] == Approx((1.35 - 1.0 / 3.0) / 0.01).epsilon(1e-9));
}

TEST_CASE("zero noise has the single fixed point V*") {
  for (int i = 0; i < 3; ++i) {
    const TabularMdp mdp = random_mdp(4, 3, 2, derive_seed(22, i));
    SearchSpec search;
    search.n_starts = 20;
    const auto res = find_fixed_points(mdp, OperatorSpec::noisy_max(NoiseModel::zero()),
                                       IntegrationSpec::quadrature(), search);
    REQUIRE(res.solutions.size() == 1);
    CHECK(sup_norm_diff(res.solutions[0].v, value_iteration(mdp).v) < 1e-6);
    CHECK(res.solutions[0].classification == Classification::optimal);
    CHECK(verify_fixed_point_as_policy_value(mdp, res.solutions[0]) < 1e-6);
  }
}

TEST_CASE("search without convergence reports a diagnostic") {
  SearchSpec search;
  search.n_starts = 3;
  search.newton = false;
  search.max_iterations = 1;
  const auto res = find_fixed_points(build_two_state_mdp(), OperatorSpec::double_q(kU1),
                                     IntegrationSpec::quadrature(), search);
  CHECK(res.solutions.empty());
  CHECK(res.converged_starts == 0);
  CHECK_FALSE(res.diagnostic.empty());
  search.damping = 0.0;
  CHECK_THROWS_AS(find_fixed_points(build_two_state_mdp(), OperatorSpec::double_q(kU1),
                                    IntegrationSpec::quadrature(), search),
                  ContractViolation);
}

TEST_CASE("parallel search matches serial") {
  SearchSpec a, b;
  a.n_starts = b.n_starts = 40;
  b.jobs = 4;
  const TabularMdp mdp = build_two_state_mdp();
  const auto ra = find_fixed_points(mdp, OperatorSpec::double_q(kU1), IntegrationSpec::quadrature(), a);
  const auto rb = find_fixed_points(mdp, OperatorSpec::double_q(kU1), IntegrationSpec::quadrature(), b);
  REQUIRE(ra.solutions.size() == rb.solutions.size());
  for (std::size_t i = 0; i < ra.solutions.size(); ++i) {
    CHECK(ra.solutions[i].v == rb.solutions[i].v);
    CHECK(ra.solutions[i].start_index == rb.solutions[i].start_index);
  }
}

TEST_CASE("induced policy") {
  const TabularMdp mdp = build_two_state_mdp();
  auto pi = induced_policy(mdp, StateValues{110.0, 100.0}, kU1, IntegrationSpec::quadrature());
  CHECK(pi(0, 0) == 1.0);
  const auto res = solve_two_state_double();
  REQUIRE(res.solutions.size() == 3);
  CHECK(std::abs(res.solutions[0].induced_policy(0, 0) - 0.622) < 0.005);
  CHECK(std::abs(res.solutions[1].induced_policy(0, 0) - 0.929) < 0.005);
}

TEST_CASE("double identity: expected output is the policy-weighted backup") {
  RandomStream rng(23);
  for (int t = 0; t < 10; ++t) {
    const TabularMdp mdp = random_mdp(5, 3, 3, derive_seed(24, t));
    StateValues v(5);
    rng.fill_uniform(v, 0.0, 2.0);
    const NoiseModel noise = t % 2 ? NoiseModel::gaussian(0.3) : NoiseModel::uniform(0.5);
    const auto integ = IntegrationSpec::quadrature();
    const StateValues e = expected_operator(mdp, v, OperatorSpec::double_q(noise), integ);
    const StochasticPolicy pi = induced_policy(mdp, v, noise, integ);
    const QTable x = backup(mdp, v);
    for (std::size_t s = 0; s < 5; ++s) {
      double w = 0;
      for (std::size_t a = 0; a < 3; ++a) w += pi(s, a) * x(s, a);
      CHECK(e[s] == Approx(w).epsilon(1e-10));
    }
  }
}

TEST_CASE("doubly bounded expectation dominates both parts") {
  RandomStream rng(25);
  for (int t = 0; t < 20; ++t) {
    const TabularMdp mdp = random_mdp(4, 3, 2, derive_seed(26, t));
    StateValues v(4), floor(4);
    rng.fill_uniform(v, 0.0, 5.0);
    rng.fill_uniform(floor, 0.0, 6.0);
    const NoiseModel noise = t % 2 ? NoiseModel::gaussian(0.5) : NoiseModel::uniform(1.0);
    for (const OperatorSpec& inner :
         {OperatorSpec::noisy_max(noise), OperatorSpec::double_q(noise), OperatorSpec::clipped_double(noise)}) {
      const auto integ = IntegrationSpec::quadrature();
      const StateValues in = expected_operator(mdp, v, inner, integ);
      const StateValues db = expected_operator(mdp, v, OperatorSpec::doubly_bounded(inner, floor), integ);
      for (std::size_t s = 0; s < 4; ++s) {
        CHECK(db[s] >= in[s] - 1e-9);
        CHECK(db[s] >= floor[s] - 1e-9);
      }
    }
  }
}

TEST_CASE("response curve") {
  const TabularMdp mdp = build_two_state_mdp();
  const StateValues frozen{0.0, 100.0};
  const auto integ = IntegrationSpec::quadrature();
  const OperatorSpec dq = OperatorSpec::double_q(kU1);
  auto at110 = response_curve(mdp, dq, 0, frozen, Sweep{110.0, 110.0, 1}, integ);
  CHECK(at110[0].v_out == Approx(110.0).epsilon(1e-12));
  auto far = response_curve(mdp, dq, 0, frozen, Sweep{103.0, 120.0, 18}, integ);
  for (const auto& p : far) CHECK(p.v_out == Approx(1.1 + 0.99 * p.v_in).epsilon(1e-13));
  CHECK(count_diagonal_crossings(response_curve(mdp, dq, 0, frozen, Sweep{95.0, 115.0, 2001}, integ)) == 3);
  CHECK(count_diagonal_crossings(response_curve(mdp, OperatorSpec::double_q(NoiseModel::zero()), 0,
                                                frozen, Sweep{95.0, 115.0, 2001}, integ)) == 1);
  const TabularMdp bad = build_clipped_bad_case();
  CHECK(count_diagonal_crossings(response_curve(bad, OperatorSpec::clipped_double(kU1), 0,
                                                StateValues{0.0, 0.0}, Sweep{99.0, 103.0, 4001},
                                                integ)) == 3);
}

TEST_CASE("derivative condition") {
  const TabularMdp mdp = build_two_state_mdp();
  const StateValues frozen{0.0, 100.0};
  const auto integ = IntegrationSpec::quadrature();
  const Sweep grid{99.0, 102.0, 61};
  auto dq = derivative_condition_check(mdp, OperatorSpec::double_q(kU1), 0, frozen, grid, 1e-4, integ);
  REQUIRE(dq.witness);
  CHECK(dq.max_slope > 1.0);
  CHECK(dq.witness->slope == dq.max_slope);
  auto nm = derivative_condition_check(mdp, OperatorSpec::noisy_max(kU1), 0, frozen, grid, 1e-4, integ);
  CHECK(nm.max_slope <= 1.0 + 1e-3);
  CHECK_FALSE(nm.witness);
  auto zero = derivative_condition_check(mdp, OperatorSpec::double_q(NoiseModel::zero()), 0, frozen,
                                         grid, 1e-4, integ);
  CHECK(zero.max_slope <= 1.0 + 1e-9);
}

TEST_CASE("variance under a floor") {
  const NoiseModel u = NoiseModel::uniform(1.0);
  auto below = variance_reduction_check(3.0, u, -1e9, 100000, 1);
  CHECK(below.var_clipped == below.var_x);
  CHECK(below.passes);
  auto above = variance_reduction_check(3.0, u, 10.3, 100000, 2);
  CHECK(above.var_clipped == 0.0);
  CHECK(above.passes);
  auto mean = variance_reduction_check(3.0, u, 3.0, 1000000, 3);
  CHECK(mean.passes);
  CHECK(mean.var_clipped < mean.var_x);
  CHECK(mean.var_x == Approx(1.0 / 3.0).epsilon(0.01));
}

}
