#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dbql/experiments.hpp"

using namespace dbql;
using doctest::Approx;

namespace {

DensityConfig small_density(const TabularMdp& mdp) {
  DensityConfig cfg;
  cfg.variants = standard_density_variants(mdp);
  cfg.n_runs = 24;
  cfg.checkpoints = {1, 2};
  cfg.seed = 3;
  return cfg;
}

BenchmarkConfig small_benchmark() {
  BenchmarkConfig cfg;
  cfg.n_mdps = 4;
  cfg.iterations = 3000;
  cfg.seed = 8;
  return cfg;
}

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("histogram bins clamp to the edges") {
  CHECK(histogram_bin(96.0, 96.0, 112.0, 60) == 0);
  CHECK(histogram_bin(50.0, 96.0, 112.0, 60) == 0);
  CHECK(histogram_bin(112.0, 96.0, 112.0, 60) == 59);
  CHECK(histogram_bin(500.0, 96.0, 112.0, 60) == 59);
  CHECK(histogram_bin(104.0, 96.0, 112.0, 60) == 30);
}

TEST_CASE("standard density variants") {
  const auto vs = standard_density_variants(build_two_state_mdp());
  REQUIRE(vs.size() == 5);
  CHECK(vs[0].op.kind() == OperatorKind::double_q);
  const double floors[] = {99.0, 99.5, 100.0, 100.5};
  for (int i = 0; i < 4; ++i) {
    CHECK(vs[i + 1].op.kind() == OperatorKind::doubly_bounded);
    CHECK(vs[i + 1].op.dp_floor()[0] == floors[i]);
    CHECK(std::isinf(vs[i + 1].op.dp_floor()[1]));
  }
}

TEST_CASE("density study bookkeeping") {
  const TabularMdp mdp = build_two_state_mdp();
  DensityConfig cfg = small_density(mdp);
  const auto r = run_density_study(mdp, cfg);
  REQUIRE(r.variants.size() == 5);
  for (const auto& v : r.variants) {
    REQUIRE(v.values.size() == 2);
    for (std::size_t c = 0; c < 2; ++c) {
      CHECK(v.values[c].size() == 24);
      CHECK(std::accumulate(v.histogram[c].begin(), v.histogram[c].end(), std::size_t{0}) == 24);
      CHECK(v.stuck_fraction[c] >= 0.0);
      CHECK(v.stuck_fraction[c] <= 1.0);
      CHECK(v.stuck_fraction[c] + v.escape_fraction[c] == Approx(1.0));
    }
  }
  cfg.jobs = 3;
  const auto p = run_density_study(mdp, cfg);
  for (std::size_t i = 0; i < 5; ++i) CHECK(p.variants[i].values == r.variants[i].values);
}

TEST_CASE("density study runs are paired across variants") {
  // With floors below every reachable value the doubly bounded variant is the
  // double operator draw for draw.
  const TabularMdp mdp = build_two_state_mdp();
  DensityConfig cfg = small_density(mdp);
  const auto inner = OperatorSpec::double_q(NoiseModel::gaussian(0.5));
  cfg.variants = {{"double", inner}, {"low_floor", OperatorSpec::doubly_bounded(inner, {0.0, 0.0})}};
  const auto r = run_density_study(mdp, cfg);
  CHECK(r.variants[0].values == r.variants[1].values);
}

TEST_CASE("k-sample model values") {
  const TabularMdp mdp = random_mdp(10, 5, 5, 50);
  const auto a = k_sample_dp_values(mdp, 10, 1);
  CHECK(a == k_sample_dp_values(mdp, 10, 1));
  CHECK_FALSE(a == k_sample_dp_values(mdp, 10, 2));
  // Rewards are exact and in [0, 1), so values lie in [0, 100).
  for (double v : a) {
    CHECK(v >= 0.0);
    CHECK(v < 100.0);
  }
  // Many samples approach V*.
  const auto big = k_sample_dp_values(mdp, 20000, 3);
  CHECK(sup_norm_diff(big, value_iteration(mdp).v) < 0.5);
}

TEST_CASE("random-MDP benchmark bookkeeping") {
  BenchmarkConfig cfg = small_benchmark();
  const auto r = run_random_mdp_benchmark(cfg);
  REQUIRE(r.summary.size() == 5);
  CHECK(r.summary[0].method == "q");
  CHECK(r.summary[1].method == "double");
  CHECK(r.summary[2].method == "doubly_bounded");
  CHECK(r.summary[2].k == 10);
  CHECK(r.summary[4].k == 30);
  REQUIRE(r.per_mdp.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(r.per_mdp[i].mdp_seed == derive_seed(8, i));
    for (const auto& row : r.per_mdp[i].rows) CHECK(row.policy_performance <= 1e-9);
  }
  double mean = 0;
  for (const auto& m : r.per_mdp) mean += m.rows[1].estimation_error;
  CHECK(r.summary[1].estimation_error == Approx(mean / 4));
  cfg.jobs = 4;
  const auto p = run_random_mdp_benchmark(cfg);
  for (std::size_t i = 0; i < 5; ++i) CHECK(p.summary[i].estimation_error == r.summary[i].estimation_error);
}

TEST_CASE("fixed-point report") {
  const TabularMdp mdp = build_two_state_mdp();
  SearchSpec search;
  search.n_starts = 20;
  auto rep = run_fixed_point_report(mdp, OperatorSpec::double_q(NoiseModel::zero()),
                                    IntegrationSpec::quadrature(), search);
  REQUIRE(rep.rows.size() == 1);
  CHECK(rep.rows[0].solution.v[0] == Approx(110.0));
  CHECK(rep.rows[0].solution.v[1] == Approx(100.0));
  CHECK(rep.rows[0].policy_value_deviation < 1e-6);

  rep = run_fixed_point_report(mdp, OperatorSpec::double_q(NoiseModel::uniform(1.0)),
                               IntegrationSpec::quadrature(), SearchSpec{});
  REQUIRE(rep.rows.size() == 3);
  for (const auto& row : rep.rows) CHECK(row.policy_value_deviation < 0.05);
}

TEST_CASE("curve report crossings") {
  const TabularMdp mdp = build_two_state_mdp();
  const StateValues frozen{0.0, 100.0};
  auto count = [](const std::vector<CurveReportRow>& rows) {
    return std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.crossing; });
  };
  const auto rows = run_curve_report(mdp, OperatorSpec::double_q(NoiseModel::uniform(1.0)), 0, frozen,
                                     Sweep{95.0, 115.0, 801}, IntegrationSpec::quadrature());
  CHECK(count(rows) == 3);
  for (const auto& r : rows) CHECK(r.diff == r.v_out - r.v_in);
  CHECK(count(run_curve_report(mdp, OperatorSpec::double_q(NoiseModel::zero()), 0, frozen,
                               Sweep{95.0, 115.0, 801}, IntegrationSpec::quadrature())) == 1);
  CHECK(count(run_curve_report(build_clipped_bad_case(),
                               OperatorSpec::clipped_double(NoiseModel::uniform(1.0)), 0,
                               StateValues{0.0, 0.0}, Sweep{99.0, 103.0, 801},
                               IntegrationSpec::quadrature())) == 3);
}

TEST_CASE("target variance study") {
  const TabularMdp mdp = build_two_state_mdp();
  VarianceStudyConfig cfg;
  cfg.agent.noise = NoiseModel::gaussian(0.5);
  cfg.agent.target_rule = TargetRule::db_adp;
  cfg.agent.initial_q = 100.0;
  cfg.train_budget = 3000;
  cfg.test_batch = 64;
  cfg.repetitions = 24;
  cfg.fit_rounds = 300;
  cfg.seed = 4;
  const auto cols = standard_variance_columns();
  REQUIRE(cols.size() == 6);
  const auto r = run_target_variance_study(mdp, cfg, cols);
  REQUIRE(r.std_dev.size() == 6);
  CHECK(r.test_transitions.size() == 64);
  CHECK(r.value_scale >= 1.0);
  // Paired: db_adp and db_adp_c never spread more than their bootstrap rule.
  CHECK(r.mean_std[1] <= r.mean_std[0]);
  CHECK(r.mean_std[4] <= r.mean_std[3]);
  for (const auto& col : r.std_dev)
    for (double s : col) CHECK(s >= 0.0);

  cfg.agent.noise = NoiseModel::zero();
  const auto z = run_target_variance_study(mdp, cfg, cols);
  for (const auto& col : z.std_dev)
    for (double s : col) CHECK(s == 0.0);

  cfg.agent.noise = NoiseModel::gaussian(0.5);
  cfg.jobs = 3;
  const auto p = run_target_variance_study(mdp, cfg, cols);
  CHECK(p.std_dev == r.std_dev);
}

TEST_CASE("agent seeds") {
  AgentRunConfig cfg;
  cfg.budget = 1000;
  cfg.n_seeds = 3;
  cfg.seed = 2;
  cfg.agent.eval_period = 250;
  const auto r = run_agent_seeds(build_two_state_mdp(), cfg);
  REQUIRE(r.runs.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(r.seeds[i] == derive_seed(2, i));
  CHECK(r.runs[0].curve.size() == 4);
}

}
