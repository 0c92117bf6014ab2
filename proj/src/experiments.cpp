#include "dbql/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "dbql/errors.hpp"
#include "dbql/parallel.hpp"

namespace dbql {

std::vector<DensityVariant> standard_density_variants(const TabularMdp& mdp, double sigma) {
  const OperatorSpec inner = OperatorSpec::double_q(NoiseModel::gaussian(sigma));
  std::vector<DensityVariant> out{{"double", inner}};
  for (double f : {99.0, 99.5, 100.0, 100.5}) {
    StateValues floor(mdp.n_states(), -std::numeric_limits<double>::infinity());
    floor[0] = f;
    char name[32];
    std::snprintf(name, sizeof name, "doubly_bounded_%.1f", f);
    out.push_back({name, OperatorSpec::doubly_bounded(inner, floor)});
  }
  return out;
}

std::size_t histogram_bin(double x, double lo, double hi, std::size_t bins) {
  require(bins >= 1 && hi > lo, "histogram: need hi > lo and at least one bin");
  if (!(x > lo)) return 0;
  const double pos = (x - lo) / (hi - lo) * static_cast<double>(bins);
  return std::min(bins - 1, static_cast<std::size_t>(pos));
}

DensityResult run_density_study(const TabularMdp& mdp, const DensityConfig& cfg) {
  require(cfg.n_runs >= 1, "density: run count must be at least 1");
  require(!cfg.checkpoints.empty(), "density: need at least one checkpoint");
  require(cfg.tracked_state < mdp.n_states(), "density: tracked state out of range");
  require(cfg.hist_bins >= 1 && cfg.hist_hi > cfg.hist_lo, "density: invalid histogram range");
  const std::size_t last = *std::max_element(cfg.checkpoints.begin(), cfg.checkpoints.end());
  const std::size_t epoch = epoch_length(cfg.alpha, mdp.discount());

  DensityResult result{cfg.checkpoints, cfg.hist_lo, cfg.hist_hi, cfg.hist_bins, {}};
  for (const DensityVariant& variant : cfg.variants) {
    DensityVariantResult vr;
    vr.name = variant.name;
    vr.values.assign(cfg.checkpoints.size(), std::vector<double>(cfg.n_runs));
    parallel_for(cfg.n_runs, cfg.jobs, [&](std::size_t run) {
      SimulationConfig sim;
      sim.op = variant.op;
      sim.alpha = cfg.alpha;
      sim.initial_value = cfg.initial_value;
      sim.n_iterations = last * epoch;
      sim.seed = derive_seed(cfg.seed, run);
      const SimulationTrace trace = run_tabular_simulation(mdp, sim);
      for (std::size_t c = 0; c < cfg.checkpoints.size(); ++c) {
        vr.values[c][run] = trace.epochs[cfg.checkpoints[c]][cfg.tracked_state];
      }
    });
    for (const auto& vals : vr.values) {
      std::vector<std::size_t> hist(cfg.hist_bins, 0);
      std::size_t stuck = 0;
      for (double x : vals) {
        ++hist[histogram_bin(x, cfg.hist_lo, cfg.hist_hi, cfg.hist_bins)];
        if (x < cfg.stuck_threshold) ++stuck;
      }
      vr.histogram.push_back(std::move(hist));
      const double frac = static_cast<double>(stuck) / static_cast<double>(vals.size());
      vr.stuck_fraction.push_back(frac);
      vr.escape_fraction.push_back(1.0 - frac);
    }
    result.variants.push_back(std::move(vr));
  }
  return result;
}

StateValues k_sample_dp_values(const TabularMdp& mdp, std::size_t k, std::uint64_t seed) {
  require(k >= 1, "k_sample_dp_values: k must be at least 1");
  AbstractModel model(mdp.discount());
  RandomStream rng(seed);
  for (std::size_t s = 0; s < mdp.n_states(); ++s) {
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
      const auto row = mdp.transition_row(s, a);
      for (std::size_t i = 0; i < k; ++i) {
        const double u = rng.uniform01();
        double cum = 0.0;
        std::size_t next = 0;
        for (std::size_t j = 0; j < row.size(); ++j) {
          if (row[j] <= 0.0) continue;
          cum += row[j];
          next = j;
          if (u < cum) break;
        }
        model.ingest(s, a, mdp.reward(s, a), next, mdp.is_absorbing(next));
      }
    }
  }
  solve_abstract_model(model, 1e-10);
  StateValues v(mdp.n_states());
  for (std::size_t s = 0; s < mdp.n_states(); ++s) v[s] = model.value(s);
  return v;
}

BenchmarkResult run_random_mdp_benchmark(const BenchmarkConfig& cfg) {
  require(cfg.n_mdps >= 1, "benchmark: need at least one MDP");
  BenchmarkResult result;
  result.per_mdp.resize(cfg.n_mdps);
  parallel_for(cfg.n_mdps, cfg.jobs, [&](std::size_t i) {
    const std::uint64_t mdp_seed = derive_seed(cfg.seed, i);
    const TabularMdp mdp = random_mdp(cfg.n_states, cfg.n_actions, cfg.branching, mdp_seed);
    const StateValues v_star = optimal_values(mdp);
    auto run = [&](const OperatorSpec& op, std::uint64_t stream, const std::string& method,
                   std::size_t k) {
      SimulationConfig sim;
      sim.op = op;
      sim.alpha = cfg.alpha;
      sim.initial_value = cfg.initial_value;
      sim.n_iterations = cfg.iterations;
      sim.seed = derive_seed(mdp_seed, stream);
      const StateValues v = run_tabular_simulation(mdp, sim).final_v;
      BenchmarkRow row{method, k, 0.0, 0.0};
      for (std::size_t s = 0; s < v.size(); ++s) row.estimation_error += v[s] - v_star[s];
      row.estimation_error /= static_cast<double>(v.size());
      row.policy_performance = evaluate_metrics(mdp, backup(mdp, v), v_star).policy_performance;
      return row;
    };
    BenchmarkMdpResult& out = result.per_mdp[i];
    out.mdp_seed = mdp_seed;
    const OperatorSpec dbl = OperatorSpec::double_q(cfg.noise);
    out.rows.push_back(run(OperatorSpec::noisy_max(cfg.noise), 1, "q", 0));
    out.rows.push_back(run(dbl, 2, "double", 0));
    for (std::size_t j = 0; j < cfg.ks.size(); ++j) {
      const std::size_t k = cfg.ks[j];
      const StateValues floor = k_sample_dp_values(mdp, k, derive_seed(mdp_seed, 100 + k));
      out.rows.push_back(run(OperatorSpec::doubly_bounded(dbl, floor), 3 + j, "doubly_bounded", k));
    }
  });
  result.summary = result.per_mdp.front().rows;
  for (auto& row : result.summary) row.estimation_error = row.policy_performance = 0.0;
  for (const auto& m : result.per_mdp) {
    for (std::size_t r = 0; r < m.rows.size(); ++r) {
      result.summary[r].estimation_error += m.rows[r].estimation_error;
      result.summary[r].policy_performance += m.rows[r].policy_performance;
    }
  }
  for (auto& row : result.summary) {
    row.estimation_error /= static_cast<double>(cfg.n_mdps);
    row.policy_performance /= static_cast<double>(cfg.n_mdps);
  }
  return result;
}

FixedPointReport run_fixed_point_report(const TabularMdp& mdp, const OperatorSpec& op,
                                        const IntegrationSpec& integ, const SearchSpec& search) {
  const SearchResult found = find_fixed_points(mdp, op, integ, search);
  FixedPointReport report;
  report.diagnostic = found.diagnostic;
  report.converged_starts = found.converged_starts;
  for (const auto& sol : found.solutions) {
    report.rows.push_back({sol, verify_fixed_point_as_policy_value(mdp, sol)});
  }
  return report;
}

std::vector<CurveReportRow> run_curve_report(const TabularMdp& mdp, const OperatorSpec& op,
                                             std::size_t state, std::span<const double> frozen,
                                             const Sweep& sweep, const IntegrationSpec& integ) {
  const std::vector<CurvePoint> curve = response_curve(mdp, op, state, frozen, sweep, integ);
  std::vector<CurveReportRow> rows;
  rows.reserve(curve.size());
  int last = 0;
  for (const auto& p : curve) {
    const double d = p.v_out - p.v_in;
    const int sign = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
    const bool crossing = sign != 0 && last != 0 && sign != last;
    if (sign != 0) last = sign;
    rows.push_back({p.v_in, p.v_out, d, crossing});
  }
  return rows;
}

std::vector<VarianceColumn> standard_variance_columns() {
  return {{"double", TargetRule::double_q, TargetRule::double_q},
          {"db_adp", TargetRule::db_adp, TargetRule::db_adp},
          {"db_adp_dagger", TargetRule::db_adp, TargetRule::double_q},
          {"clipped_double", TargetRule::clipped_double, TargetRule::clipped_double},
          {"db_adp_c", TargetRule::db_adp_c, TargetRule::db_adp_c},
          {"db_adp_c_dagger", TargetRule::db_adp_c, TargetRule::clipped_double}};
}

VarianceStudyResult run_target_variance_study(const TabularMdp& mdp, const VarianceStudyConfig& cfg,
                                              const std::vector<VarianceColumn>& columns) {
  require(cfg.repetitions >= 2, "variance study: need at least 2 repetitions");
  require(cfg.test_batch >= 1, "variance study: test batch must be nonempty");
  AgentConfig train = cfg.agent;
  train.seed = derive_seed(cfg.seed, 0);
  const AgentResult snap = run_learning_agent(mdp, train, cfg.train_budget);
  const StateAbstraction abs = StateAbstraction::identity();
  const ValueIterationResult vi = value_iteration(mdp);

  VarianceStudyResult result;
  result.columns = columns;
  double scale = 0.0;
  for (double v : vi.v) scale += std::abs(v);
  result.value_scale = std::max(1.0, scale / static_cast<double>(vi.v.size()));

  RandomStream pick(derive_seed(cfg.seed, 1));
  std::vector<std::size_t> test(cfg.test_batch);
  for (auto& i : test) i = snap.buffer.sample_index(pick);
  for (std::size_t i : test) result.test_transitions.push_back(snap.buffer.at(i).t);
  // The fitting batches are fixed across repetitions; only the injected
  // regression noise is redrawn.
  RandomStream fit_pick(derive_seed(cfg.seed, 2));
  std::vector<std::size_t> fit(cfg.fit_rounds * cfg.agent.batch_size);
  for (auto& i : fit) i = snap.buffer.sample_index(fit_pick);

  const std::size_t n_test = test.size();
  result.std_dev.assign(columns.size(), std::vector<double>(n_test));
  result.mean_std.assign(columns.size(), 0.0);
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const VarianceColumn& col = columns[c];
    // targets[rep][i]
    std::vector<std::vector<double>> targets(cfg.repetitions, std::vector<double>(n_test));
    parallel_for(cfg.repetitions, cfg.jobs, [&](std::size_t rep) {
      QTable live1 = snap.live1, live2 = snap.live2, frozen1 = snap.frozen1, frozen2 = snap.frozen2;
      RandomStream rng(derive_seed(cfg.seed, 1000 + rep));
      const std::size_t b = cfg.agent.batch_size;
      for (std::size_t round = 0; round < cfg.fit_rounds; ++round) {
        regress_batch(mdp, cfg.agent, col.fit_rule, snap.buffer,
                      std::span<const std::size_t>(fit.data() + round * b, b), live1, live2,
                      frozen1, frozen2, snap.model, abs, rng);
        if ((round + 1) % cfg.agent.target_refresh_period == 0) {
          frozen1 = live1;
          frozen2 = live2;
        }
      }
      frozen1 = live1;
      frozen2 = live2;
      const TargetTables tables{live1, live2, frozen1, frozen2};
      for (std::size_t i = 0; i < n_test; ++i) {
        const auto cont = continuation_of(snap.buffer, test[i], cfg.agent.multistep_horizon);
        const TargetValue y = compute_target(col.measure_rule, tables, snap.model, abs,
                                             snap.buffer.at(test[i]).t, mdp.discount(), cont);
        targets[rep][i] = y.value ? *y.value : std::numeric_limits<double>::quiet_NaN();
      }
    });
    double total = 0.0;
    for (std::size_t i = 0; i < n_test; ++i) {
      // Shifted by the first repetition so identical targets give exactly 0.
      const double t0 = targets[0][i];
      double mean = 0.0;
      for (std::size_t r = 0; r < cfg.repetitions; ++r) mean += targets[r][i] - t0;
      mean /= static_cast<double>(cfg.repetitions);
      double ss = 0.0;
      for (std::size_t r = 0; r < cfg.repetitions; ++r) {
        const double d = (targets[r][i] - t0) - mean;
        ss += d * d;
      }
      const double sd = std::sqrt(ss / static_cast<double>(cfg.repetitions - 1)) / result.value_scale;
      result.std_dev[c][i] = sd;
      total += sd;
    }
    result.mean_std[c] = total / static_cast<double>(n_test);
  }
  return result;
}

AgentRunResult run_agent_seeds(const TabularMdp& mdp, const AgentRunConfig& cfg) {
  require(cfg.n_seeds >= 1, "agent runs: need at least one seed");
  std::vector<std::optional<AgentResult>> runs(cfg.n_seeds);
  AgentRunResult out;
  for (std::size_t i = 0; i < cfg.n_seeds; ++i) out.seeds.push_back(derive_seed(cfg.seed, i));
  parallel_for(cfg.n_seeds, cfg.jobs, [&](std::size_t i) {
    AgentConfig a = cfg.agent;
    a.seed = out.seeds[i];
    runs[i].emplace(run_learning_agent(mdp, a, cfg.budget));
  });
  for (auto& r : runs) out.runs.push_back(std::move(*r));
  return out;
}

}  // namespace dbql
