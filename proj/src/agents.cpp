#include "dbql/agents.hpp"

#include <algorithm>
#include <cmath>

#include "dbql/errors.hpp"
#include "dbql/simd/kernels.hpp"

namespace dbql {

void SimulationConfig::validate(const TabularMdp& mdp) const {
  require(alpha > 0.0 && alpha <= 1.0, "simulation: alpha must lie in (0, 1]");
  require(std::isfinite(initial_value), "simulation: initial value must be finite");
  require(initial_table.empty() || initial_table.size() == mdp.n_states(),
          "simulation: initial table does not match state count");
  if (op.has_floor()) {
    require(op.dp_floor().size() == mdp.n_states(), "simulation: floor does not match state count");
  }
}

std::size_t epoch_length(double alpha, double discount) {
  require(alpha > 0.0 && alpha <= 1.0, "epoch_length: alpha must lie in (0, 1]");
  const double n = std::round(1.0 / (alpha * (1.0 - discount)));
  return std::max<std::size_t>(1, static_cast<std::size_t>(n));
}

SimulationTrace run_tabular_simulation(const TabularMdp& mdp, const SimulationConfig& cfg) {
  cfg.validate(mdp);
  SimulationTrace trace;
  trace.epoch_length = epoch_length(cfg.alpha, mdp.discount());
  StateValues v = cfg.initial_table.empty() ? StateValues(mdp.n_states(), cfg.initial_value)
                                            : cfg.initial_table;
  trace.epochs.push_back(v);
  OperatorEngine engine(mdp, cfg.op);
  RandomStream rng(cfg.seed);
  const auto& k = simd::kernels();
  for (std::size_t it = 1; it <= cfg.n_iterations; ++it) {
    const StateValues& draw = engine.draw(v, rng);
    k.soft_update(v.data(), draw.data(), v.size(), cfg.alpha);
    if (it % trace.epoch_length == 0) trace.epochs.push_back(v);
  }
  trace.final_v = std::move(v);
  return trace;
}

const char* to_string(TargetRule rule) {
  switch (rule) {
    case TargetRule::q:
      return "q";
    case TargetRule::double_q:
      return "double";
    case TargetRule::clipped_double:
      return "clipped_double";
    case TargetRule::db_adp:
      return "db_adp";
    case TargetRule::db_adp_c:
      return "db_adp_c";
    case TargetRule::adp_only:
      return "adp_only";
    case TargetRule::multistep:
      return "multistep";
  }
  return "?";
}

std::optional<TargetRule> parse_target_rule(std::string_view name) {
  for (TargetRule r : {TargetRule::q, TargetRule::double_q, TargetRule::clipped_double,
                       TargetRule::db_adp, TargetRule::db_adp_c, TargetRule::adp_only,
                       TargetRule::multistep}) {
    if (name == to_string(r)) return r;
  }
  return std::nullopt;
}

void AgentConfig::validate(const TabularMdp& mdp) const {
  require(exploration_rate >= 0.0 && exploration_rate <= 1.0,
          "agent: exploration_rate must lie in [0, 1]");
  require(target_refresh_period >= 1, "agent: target_refresh_period must be at least 1");
  require(buffer_capacity >= 1, "agent: buffer_capacity must be at least 1");
  require(multistep_horizon >= 1, "agent: multistep_horizon must be at least 1");
  require(learning_rate > 0.0 && learning_rate <= 1.0, "agent: learning_rate must lie in (0, 1]");
  require(batch_size >= 1, "agent: batch_size must be at least 1");
  require(start_state < mdp.n_states(), "agent: start_state out of range");
  require(std::isfinite(initial_q), "agent: initial_q must be finite");
  require(eval_period >= 1, "agent: eval_period must be at least 1");
}

ExperienceBuffer::ExperienceBuffer(std::size_t capacity) {
  require(capacity >= 1, "experience buffer: capacity must be at least 1");
  ring_.resize(capacity);
}

void ExperienceBuffer::push(Transition t, std::uint64_t episode) {
  ring_[head_] = Entry{std::move(t), episode};
  head_ = (head_ + 1) % ring_.size();
  size_ = std::min(size_ + 1, ring_.size());
  ++pushed_;
}

const ExperienceBuffer::Entry& ExperienceBuffer::at(std::size_t i) const {
  require(i < size_, "experience buffer: index out of range");
  const std::size_t oldest = (head_ + ring_.size() - size_) % ring_.size();
  return ring_[(oldest + i) % ring_.size()];
}

std::size_t ExperienceBuffer::sample_index(RandomStream& rng) const {
  require(size_ > 0, "experience buffer: sampling from an empty buffer");
  return static_cast<std::size_t>(rng.below(size_));
}

TargetRule bootstrap_rule(TargetRule rule) {
  switch (rule) {
    case TargetRule::db_adp:
      return TargetRule::double_q;
    case TargetRule::db_adp_c:
      return TargetRule::clipped_double;
    default:
      return rule;
  }
}

namespace {

std::size_t index_of(const Observation& obs) {
  const auto* i = std::get_if<std::uint64_t>(&obs);
  require(i != nullptr, "tabular agent: transitions must carry state indices");
  return static_cast<std::size_t>(*i);
}

double max_of(std::span<const double> row) { return *std::max_element(row.begin(), row.end()); }

double bootstrap_value(TargetRule rule, const TargetTables& tb, std::size_t next) {
  switch (rule) {
    case TargetRule::q:
    case TargetRule::multistep:
    case TargetRule::adp_only:
      return max_of(tb.frozen1.row(next));
    case TargetRule::double_q: {
      const std::size_t a = argmax(tb.live1.row(next));
      return tb.frozen2.row(next)[a];
    }
    case TargetRule::clipped_double: {
      const std::size_t a = argmax(tb.live1.row(next));
      return std::min(tb.frozen1.row(next)[a], tb.frozen2.row(next)[a]);
    }
    default:
      contract_fail("bootstrap_value: not a bootstrap rule");
  }
}

}  // namespace

TargetValue compute_target(TargetRule rule, const TargetTables& tables, const AbstractModel& model,
                           const StateAbstraction& abs, const Transition& t, double discount,
                           std::span<const Transition> continuation) {
  TargetValue out;
  out.dp = dp_target(model, abs, t);
  switch (rule) {
    case TargetRule::q:
    case TargetRule::double_q:
    case TargetRule::clipped_double:
      out.bootstrap = t.terminal ? t.reward : t.reward + discount * bootstrap_value(rule, tables, index_of(t.next));
      out.value = out.bootstrap;
      return out;
    case TargetRule::db_adp:
    case TargetRule::db_adp_c: {
      const TargetRule inner = bootstrap_rule(rule);
      out.bootstrap = t.terminal ? t.reward : t.reward + discount * bootstrap_value(inner, tables, index_of(t.next));
      out.value = out.dp ? std::max(*out.bootstrap, *out.dp) : *out.bootstrap;
      return out;
    }
    case TargetRule::adp_only:
      out.value = out.dp;
      return out;
    case TargetRule::multistep: {
      double ret = t.reward;
      double scale = discount;
      const Transition* last = &t;
      for (const Transition& c : continuation) {
        if (last->terminal) break;
        ret += scale * c.reward;
        scale *= discount;
        last = &c;
      }
      if (!last->terminal) ret += scale * max_of(tables.frozen1.row(index_of(last->next)));
      out.bootstrap = ret;
      out.value = ret;
      return out;
    }
  }
  return out;
}

Metrics evaluate_metrics(const TabularMdp& mdp, const QTable& q, std::span<const double> v_star) {
  require(v_star.size() == mdp.n_states(), "evaluate_metrics: V* does not match state count");
  const StateValues v = q.state_values();
  const StateValues vpi = policy_evaluation(mdp, StochasticPolicy::greedy(q));
  Metrics m;
  for (std::size_t s = 0; s < mdp.n_states(); ++s) {
    m.estimation_error += v[s] - v_star[s];
    m.policy_performance += vpi[s] - v_star[s];
  }
  m.estimation_error /= static_cast<double>(mdp.n_states());
  m.policy_performance /= static_cast<double>(mdp.n_states());
  return m;
}

std::vector<Transition> continuation_of(const ExperienceBuffer& buffer, std::size_t i,
                                        std::size_t horizon) {
  std::vector<Transition> out;
  const std::uint64_t episode = buffer.at(i).episode;
  if (buffer.at(i).t.terminal) return out;
  for (std::size_t j = i + 1; j < buffer.size() && out.size() + 1 < horizon; ++j) {
    const auto& e = buffer.at(j);
    if (e.episode != episode) break;
    out.push_back(e.t);
    if (e.t.terminal) break;
  }
  return out;
}

std::size_t regress_batch(const TabularMdp& mdp, const AgentConfig& cfg, TargetRule rule,
                          const ExperienceBuffer& buffer, std::span<const std::size_t> batch,
                          QTable& live1, QTable& live2, const QTable& frozen1,
                          const QTable& frozen2, const AbstractModel& model,
                          const StateAbstraction& abs, RandomStream& rng) {
  const std::size_t b = batch.size();
  thread_local std::vector<double> noise;
  noise.resize(2 * b);
  cfg.noise.sample(rng, noise);
  const TargetTables tables{live1, live2, frozen1, frozen2};
  std::vector<double> targets(b);
  std::vector<char> present(b);
  std::size_t skipped = 0;
  // Targets are computed for the whole batch before any table changes.
  for (std::size_t k = 0; k < b; ++k) {
    const Transition& t = buffer.at(batch[k]).t;
    std::vector<Transition> cont;
    if (rule == TargetRule::multistep) cont = continuation_of(buffer, batch[k], cfg.multistep_horizon);
    const TargetValue y = compute_target(rule, tables, model, abs, t, mdp.discount(), cont);
    present[k] = y.value.has_value();
    if (y.value) {
      targets[k] = *y.value;
    } else {
      ++skipped;
    }
  }
  const double lr = cfg.learning_rate;
  for (std::size_t k = 0; k < b; ++k) {
    if (!present[k]) continue;
    const Transition& t = buffer.at(batch[k]).t;
    const std::size_t s = index_of(t.state);
    double& q1 = live1.row(s)[t.action];
    double& q2 = live2.row(s)[t.action];
    q1 = (1.0 - lr) * q1 + lr * (targets[k] + noise[k]);
    q2 = (1.0 - lr) * q2 + lr * (targets[k] + noise[b + k]);
  }
  return skipped;
}

namespace {

std::size_t sample_next(const TabularMdp& mdp, std::size_t s, std::size_t a, RandomStream& rng) {
  const auto row = mdp.transition_row(s, a);
  const double u = rng.uniform01();
  double cum = 0.0;
  std::size_t last = 0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    if (row[j] <= 0.0) continue;
    cum += row[j];
    last = j;
    if (u < cum) return j;
  }
  return last;
}

bool greedy_is_optimal(const QTable& q, const QTable& q_star) {
  for (std::size_t s = 0; s < q.n_states(); ++s) {
    const auto row = q_star.row(s);
    const double best = max_of(row);
    const double slack = 1e-9 * std::max(1.0, std::abs(best));
    if (row[q.greedy_action(s)] < best - slack) return false;
  }
  return true;
}

}  // namespace

AgentResult run_learning_agent(const TabularMdp& env, const AgentConfig& cfg, std::size_t budget) {
  cfg.validate(env);
  require(budget >= 1, "agent: budget must be at least 1");
  const std::size_t ns = env.n_states();
  const std::size_t na = env.n_actions();
  const ValueIterationResult vi = value_iteration(env);
  const StateValues v_star = optimal_values(env);

  QTable init(ns, na);
  for (double& x : init.flat()) x = cfg.initial_q;
  AgentResult res{{}, init, init, init, init, AbstractModel(env.discount()),
                  ExperienceBuffer(cfg.buffer_capacity), {}, std::nullopt, 0};
  const StateAbstraction abs = StateAbstraction::identity();
  RandomStream rng(cfg.seed);
  std::vector<std::size_t> batch(cfg.batch_size);
  std::vector<AbstractState> trajectory;

  std::size_t s = cfg.start_state;
  std::uint64_t episode = 0;
  std::size_t episode_steps = 0;
  bool optimal_run = false;

  auto finish_episode = [&] {
    sweep_trajectory(res.model, trajectory);
    trajectory.clear();
    ++episode;
    episode_steps = 0;
    s = cfg.start_state;
  };

  for (std::size_t step = 1; step <= budget; ++step) {
    const bool explore = rng.uniform01() < cfg.exploration_rate;
    const std::size_t a = explore ? static_cast<std::size_t>(rng.below(na)) : res.live1.greedy_action(s);
    const std::size_t next = sample_next(env, s, a, rng);
    const bool terminal = env.is_absorbing(next);
    const Transition t = Transition::tabular(s, a, env.reward(s, a), next, terminal);
    res.buffer.push(t, episode);
    ingest_transition(res.model, abs, t);
    dp_backup_state(res.model, abs.map(t.state));
    trajectory.push_back(abs.map(t.state));

    for (auto& i : batch) i = res.buffer.sample_index(rng);
    res.skipped_targets += regress_batch(env, cfg, cfg.target_rule, res.buffer, batch, res.live1,
                                         res.live2, res.frozen1, res.frozen2, res.model, abs, rng);

    if (step % cfg.target_refresh_period == 0) {
      res.frozen1 = res.live1;
      res.frozen2 = res.live2;
      full_value_iteration_sweep(res.model, 1);
    }

    ++episode_steps;
    s = next;
    if (terminal || (cfg.episode_length != 0 && episode_steps >= cfg.episode_length)) finish_episode();

    if (step % cfg.eval_period == 0 || step == budget) {
      const Metrics m = evaluate_metrics(env, res.live1, v_star);
      const StateValues vpi = policy_evaluation(env, StochasticPolicy::greedy(res.live1));
      const bool opt = greedy_is_optimal(res.live1, vi.q);
      res.curve.push_back({step, vpi[cfg.start_state], m.estimation_error, m.policy_performance, opt});
      if (opt && !optimal_run) {
        res.steps_to_optimal = step;
        optimal_run = true;
      } else if (!opt) {
        res.steps_to_optimal.reset();
        optimal_run = false;
      }
    }
  }
  res.metrics = evaluate_metrics(env, res.live1, v_star);
  return res;
}

}  // namespace dbql
