#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "dbql/agents.hpp"
#include "dbql/errors.hpp"

using namespace dbql;
using doctest::Approx;

namespace {

const StateAbstraction kId = StateAbstraction::identity();

QTable random_table(std::size_t n, std::size_t k, RandomStream& rng, double lo, double hi) {
  QTable q(n, k);
  rng.fill_uniform(q.flat(), lo, hi);
  return q;
}

// Two-sided exact binomial sign test.
double sign_test_p(std::size_t wins, std::size_t losses) {
  const std::size_t n = wins + losses;
  const std::size_t k = std::min(wins, losses);
  double tail = 0;
  for (std::size_t i = 0; i <= k; ++i) {
    tail += std::exp(std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0) -
                     n * std::log(2.0));
  }
  return std::min(1.0, 2.0 * tail);
}

double median(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  return n % 2 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

}  // namespace

TEST_SUITE("agents") {

TEST_CASE("epoch length") {
  CHECK(epoch_length(0.01, 0.99) == 10000);
  CHECK(epoch_length(1.0, 0.0) == 1);
}

TEST_CASE("zero-noise simulation converges to V*") {
  const TabularMdp mdp = build_two_state_mdp();
  SimulationConfig cfg;
  cfg.op = OperatorSpec::noisy_max(NoiseModel::zero());
  cfg.n_iterations = 20 * epoch_length(cfg.alpha, mdp.discount());
  cfg.initial_value = 0.0;
  const auto trace = run_tabular_simulation(mdp, cfg);
  CHECK(trace.epochs.size() == 21);
  CHECK(trace.epochs[0] == StateValues{0.0, 0.0});
  CHECK(std::abs(trace.final_v[0] - 110.0) < 1e-2);
  CHECK(std::abs(trace.final_v[1] - 100.0) < 1e-2);
}

TEST_CASE("simulation is seed-deterministic") {
  const TabularMdp mdp = build_two_state_mdp();
  SimulationConfig cfg;
  cfg.op = OperatorSpec::double_q(NoiseModel::gaussian(0.5));
  cfg.n_iterations = 30000;
  cfg.initial_value = 100.0;
  cfg.seed = 77;
  const auto a = run_tabular_simulation(mdp, cfg);
  const auto b = run_tabular_simulation(mdp, cfg);
  CHECK(a.epochs == b.epochs);
  cfg.seed = 78;
  CHECK_FALSE(run_tabular_simulation(mdp, cfg).final_v == a.final_v);
  cfg.alpha = 1.5;
  CHECK_THROWS_AS(cfg.validate(mdp), ContractViolation);
}

TEST_CASE("target rule names") {
  for (auto r : {TargetRule::q, TargetRule::double_q, TargetRule::clipped_double, TargetRule::db_adp,
                 TargetRule::db_adp_c, TargetRule::adp_only, TargetRule::multistep}) {
    CHECK(parse_target_rule(to_string(r)) == r);
  }
  CHECK_FALSE(parse_target_rule("sarsa"));
  CHECK(bootstrap_rule(TargetRule::db_adp) == TargetRule::double_q);
  CHECK(bootstrap_rule(TargetRule::db_adp_c) == TargetRule::clipped_double);
}

TEST_CASE("compute_target rules") {
  RandomStream rng(40);
  const QTable l1 = random_table(3, 2, rng, 0, 10), l2 = random_table(3, 2, rng, 0, 10);
  const QTable f1 = random_table(3, 2, rng, 0, 10), f2 = random_table(3, 2, rng, 0, 10);
  const TargetTables tables{l1, l2, f1, f2};
  AbstractModel model(0.9);
  model.ingest(0, 0, 1.0, 1, true);

  const Transition term = Transition::tabular(0, 0, 1.0, 1, true);
  for (auto r : {TargetRule::q, TargetRule::double_q, TargetRule::clipped_double, TargetRule::db_adp,
                 TargetRule::db_adp_c, TargetRule::adp_only, TargetRule::multistep}) {
    CHECK(*compute_target(r, tables, model, kId, term, 0.9).value == 1.0);
  }

  const Transition t = Transition::tabular(0, 1, 0.5, 2);
  const double g = 0.9;
  const std::size_t sel = l1.greedy_action(2);
  const double q = *compute_target(TargetRule::q, tables, model, kId, t, g).value;
  CHECK(q == 0.5 + g * std::max(f1(2, 0), f1(2, 1)));
  const double d = *compute_target(TargetRule::double_q, tables, model, kId, t, g).value;
  CHECK(d == 0.5 + g * f2(2, sel));
  const double c = *compute_target(TargetRule::clipped_double, tables, model, kId, t, g).value;
  CHECK(c == 0.5 + g * std::min(f1(2, sel), f2(2, sel)));

  // Successor 2 is unknown to the model: doubly bounded falls back.
  CHECK(*compute_target(TargetRule::db_adp, tables, model, kId, t, g).value == d);
  CHECK(*compute_target(TargetRule::db_adp_c, tables, model, kId, t, g).value == c);
  CHECK_FALSE(compute_target(TargetRule::adp_only, tables, model, kId, t, g).value);
}

TEST_CASE("doubly bounded takes the larger target") {
  QTable z(2, 1, 198.0);
  const TargetTables tables{z, z, z, z};
  AbstractModel model(0.5);
  model.ingest(1, 0, 201.0, 1, true);
  dp_backup_state(model, 1);
  // y_boots = 0.5 * 198 = 99, y_dp = 0.5 * 201 = 100.5.
  const auto tv = compute_target(TargetRule::db_adp, tables, model, kId,
                                 Transition::tabular(0, 0, 0.0, 1), 0.5);
  CHECK(*tv.bootstrap == 99.0);
  CHECK(*tv.dp == 100.5);
  CHECK(*tv.value == 100.5);
  z(1, 0) = 210.0;
  const auto high = compute_target(TargetRule::db_adp, tables, model, kId,
                                   Transition::tabular(0, 0, 0.0, 1), 0.5);
  CHECK(*high.value == 105.0);
}

TEST_CASE("doubly bounded targets dominate their bootstrap targets") {
  RandomStream rng(41);
  std::size_t violations = 0;
  for (int trial = 0; trial < 100000; ++trial) {
    const QTable l1 = random_table(4, 3, rng, -5, 5), l2 = random_table(4, 3, rng, -5, 5);
    const QTable f1 = random_table(4, 3, rng, -5, 5), f2 = random_table(4, 3, rng, -5, 5);
    AbstractModel model(0.9);
    model.ingest(rng.below(4), rng.below(3), rng.uniform01(), rng.below(4), false);
    model.set_value(model.known_states()[0], 10.0 * rng.uniform01() - 5.0);
    const Transition t = Transition::tabular(rng.below(4), rng.below(3), rng.uniform01(), rng.below(4),
                                             rng.uniform01() < 0.1);
    const TargetTables tables{l1, l2, f1, f2};
    const double db = *compute_target(TargetRule::db_adp, tables, model, kId, t, 0.9).value;
    const double dq = *compute_target(TargetRule::double_q, tables, model, kId, t, 0.9).value;
    const double dbc = *compute_target(TargetRule::db_adp_c, tables, model, kId, t, 0.9).value;
    const double cq = *compute_target(TargetRule::clipped_double, tables, model, kId, t, 0.9).value;
    violations += db < dq;
    violations += dbc < cq;
  }
  CHECK(violations == 0);
}

TEST_CASE("multistep target") {
  QTable f(3, 2, 0.0);
  f(2, 1) = 10.0;
  const TargetTables tables{f, f, f, f};
  AbstractModel model(0.9);
  const Transition t0 = Transition::tabular(0, 0, 1.0, 1);
  const Transition cont[] = {Transition::tabular(1, 0, 2.0, 2)};
  const double y = *compute_target(TargetRule::multistep, tables, model, kId, t0, 0.9, cont).value;
  CHECK(y == Approx(1.0 + 0.9 * 2.0 + 0.81 * 10.0));
  const Transition cut[] = {Transition::tabular(1, 0, 2.0, 2, true)};
  CHECK(*compute_target(TargetRule::multistep, tables, model, kId, t0, 0.9, cut).value ==
        Approx(1.0 + 0.9 * 2.0));
}

TEST_CASE("experience buffer is a FIFO ring") {
  ExperienceBuffer buf(3);
  for (std::uint64_t i = 0; i < 5; ++i) {
    buf.push(Transition::tabular(i, 0, 0.0, 0), i / 2);
    CHECK(buf.size() <= 3);
  }
  CHECK(buf.size() == 3);
  CHECK(buf.total_pushed() == 5);
  CHECK(std::get<std::uint64_t>(buf.at(0).t.state) == 2);
  CHECK(std::get<std::uint64_t>(buf.at(2).t.state) == 4);
  RandomStream rng(42);
  for (int i = 0; i < 100; ++i) CHECK(buf.sample_index(rng) < 3);

  ExperienceBuffer ep(10);
  ep.push(Transition::tabular(0, 0, 0.0, 1), 0);
  ep.push(Transition::tabular(1, 0, 0.0, 0), 0);
  ep.push(Transition::tabular(0, 0, 0.0, 1), 1);
  CHECK(continuation_of(ep, 0, 5).size() == 1);
  CHECK(continuation_of(ep, 0, 1).empty());
}

TEST_CASE("metrics") {
  const TabularMdp mdp = build_two_state_mdp();
  const auto vi = value_iteration(mdp);
  auto m = evaluate_metrics(mdp, vi.q, vi.v);
  CHECK(std::abs(m.estimation_error) < 1e-8);
  CHECK(std::abs(m.policy_performance) < 1e-8);
  QTable shifted = vi.q;
  for (double& x : shifted.flat()) x += 3.0;
  m = evaluate_metrics(mdp, shifted, vi.v);
  CHECK(m.estimation_error == Approx(3.0));
  CHECK(std::abs(m.policy_performance) < 1e-8);
  RandomStream rng(43);
  for (int i = 0; i < 50; ++i) {
    const TabularMdp r = random_mdp(6, 3, 3, derive_seed(44, i));
    const auto v = value_iteration(r);
    CHECK(evaluate_metrics(r, random_table(6, 3, rng, 0, 100), v.v).policy_performance <= 1e-9);
  }
}

TEST_CASE("zero-noise Q-learning agent finds the optimal policy") {
  const TabularMdp mdp = build_two_state_mdp();
  AgentConfig cfg;
  cfg.target_rule = TargetRule::q;
  cfg.seed = 1;
  const auto r = run_learning_agent(mdp, cfg, 100000);
  REQUIRE_FALSE(r.curve.empty());
  CHECK(std::abs(r.curve.back().greedy_return - 110.0) < 0.5);
  CHECK(r.curve.back().step == 100000);
  CHECK(r.buffer.size() <= cfg.buffer_capacity);
  for (const auto& row : r.curve) CHECK(row.policy_performance <= 1e-9);
}

TEST_CASE("agent runs are bit-identical per seed") {
  const TabularMdp mdp = random_mdp(5, 3, 3, 45);
  AgentConfig cfg;
  cfg.target_rule = TargetRule::db_adp_c;
  cfg.noise = NoiseModel::gaussian(0.5);
  cfg.seed = 9;
  cfg.eval_period = 500;
  const auto a = run_learning_agent(mdp, cfg, 3000);
  const auto b = run_learning_agent(mdp, cfg, 3000);
  CHECK(a.live1 == b.live1);
  CHECK(a.live2 == b.live2);
  CHECK(a.model == b.model);
  REQUIRE(a.curve.size() == b.curve.size());
  for (std::size_t i = 0; i < a.curve.size(); ++i)
    CHECK(a.curve[i].greedy_return == b.curve[i].greedy_return);
}

TEST_CASE("full exploration covers every pair") {
  const TabularMdp mdp = build_two_state_mdp();
  AgentConfig cfg;
  cfg.exploration_rate = 1.0;
  cfg.seed = 3;
  // Episodes of 10 steps restart in s0, so s1 is reached within a few steps with
  // probability 1 - 2^-k; 2000 steps leave a failure chance far below 1e-30.
  const auto r = run_learning_agent(mdp, cfg, 2000);
  for (std::size_t s = 0; s < 2; ++s) {
    const auto* e = r.model.find(s);
    REQUIRE(e);
    for (std::size_t a = 0; a < 2; ++a) CHECK(e->actions.count(a) == 1);
  }
}

TEST_CASE("adp-only agent never claims more than V*") {
  for (int i = 0; i < 5; ++i) {
    const TabularMdp mdp = random_mdp(10, 5, 5, derive_seed(46, i));
    AgentConfig cfg;
    cfg.target_rule = TargetRule::adp_only;
    cfg.seed = i;
    cfg.episode_length = 5;
    const auto r = run_learning_agent(mdp, cfg, 300);
    const auto vs = value_iteration(mdp).v;
    const auto vpi = policy_evaluation(mdp, StochasticPolicy::greedy(r.live1));
    for (std::size_t s = 0; s < 10; ++s) CHECK(vpi[s] <= vs[s] + 1e-9);
  }
}

TEST_CASE("doubly bounded reaches the optimal policy sooner than double") {
  const TabularMdp mdp = build_two_state_mdp();
  const std::size_t budget = 20000;
  std::vector<double> sd, sb;
  std::size_t wins = 0, losses = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    AgentConfig cfg;
    cfg.noise = NoiseModel::gaussian(0.5);
    cfg.initial_q = 100.0;
    cfg.eval_period = 100;
    cfg.seed = derive_seed(5, seed);
    cfg.target_rule = TargetRule::double_q;
    const auto d = run_learning_agent(mdp, cfg, budget);
    cfg.target_rule = TargetRule::db_adp;
    const auto b = run_learning_agent(mdp, cfg, budget);
    const double td = static_cast<double>(d.steps_to_optimal.value_or(budget + 1));
    const double tb = static_cast<double>(b.steps_to_optimal.value_or(budget + 1));
    sd.push_back(td);
    sb.push_back(tb);
    wins += tb < td;
    losses += tb > td;
  }
  CHECK(median(sb) < median(sd));
  CHECK(sign_test_p(wins, losses) < 0.01);
}

}
