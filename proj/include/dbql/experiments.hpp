#pragma once

// Reproduction harnesses. Every experiment is a pure function of its config:
// run i of an experiment with master seed m uses derive_seed(m, i), runs fan
// out over `jobs` workers and results are stored by run index.

#include <cstdint>
#include <string>
#include <vector>

#include "dbql/agents.hpp"
#include "dbql/fixed_point.hpp"

namespace dbql {

// ---- density study ---------------------------------------------------------

struct DensityVariant {
  std::string name;
  OperatorSpec op;
};

struct DensityConfig {
  std::vector<DensityVariant> variants;
  double alpha = 0.01;
  double initial_value = 100.0;
  std::size_t n_runs = 1000;
  std::vector<std::size_t> checkpoints{5, 10, 15, 20};  // epochs
  std::size_t tracked_state = 0;
  double stuck_threshold = 105.0;
  double hist_lo = 96.0;
  double hist_hi = 112.0;
  std::size_t hist_bins = 60;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
};

// Standard variants: double, then doubly bounded (double inner) with
// V_DP(s0) in {99.0, 99.5, 100.0, 100.5} and no floor elsewhere.
std::vector<DensityVariant> standard_density_variants(const TabularMdp& mdp, double sigma = 0.5);

struct DensityVariantResult {
  std::string name;
  // values[c][run]: V(tracked_state) at checkpoints[c].
  std::vector<std::vector<double>> values;
  // counts[c][bin]; values outside the range land in the edge bins.
  std::vector<std::vector<std::size_t>> histogram;
  std::vector<double> stuck_fraction;
  std::vector<double> escape_fraction;
};

struct DensityResult {
  std::vector<std::size_t> checkpoints;
  double hist_lo, hist_hi;
  std::size_t hist_bins;
  std::vector<DensityVariantResult> variants;
};

DensityResult run_density_study(const TabularMdp& mdp, const DensityConfig& cfg);

std::size_t histogram_bin(double x, double lo, double hi, std::size_t bins);

// ---- random-MDP benchmark --------------------------------------------------

struct BenchmarkConfig {
  std::size_t n_mdps = 1000;
  std::size_t n_states = 10;
  std::size_t n_actions = 5;
  std::size_t branching = 5;
  std::vector<std::size_t> ks{10, 20, 30};
  std::size_t iterations = 50000;
  NoiseModel noise = NoiseModel::gaussian(0.5);
  double alpha = 0.01;
  double initial_value = 0.0;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
};

struct BenchmarkRow {
  std::string method;  // "q", "double", "doubly_bounded"
  std::size_t k = 0;   // model samples per pair (doubly_bounded only)
  double estimation_error = 0.0;
  double policy_performance = 0.0;
};

struct BenchmarkMdpResult {
  std::uint64_t mdp_seed;
  std::vector<BenchmarkRow> rows;  // same order as the summary
};

struct BenchmarkResult {
  std::vector<BenchmarkRow> summary;  // means over MDPs
  std::vector<BenchmarkMdpResult> per_mdp;
};

// V_DP from an empirical model with exactly k sampled successors per (s, a)
// and exact rewards, solved to convergence.
StateValues k_sample_dp_values(const TabularMdp& mdp, std::size_t k, std::uint64_t seed);

BenchmarkResult run_random_mdp_benchmark(const BenchmarkConfig& cfg);

// ---- fixed-point report ----------------------------------------------------

struct FixedPointReportRow {
  FixedPointSolution solution;
  double policy_value_deviation;
};

struct FixedPointReport {
  std::vector<FixedPointReportRow> rows;
  std::string diagnostic;
  std::size_t converged_starts = 0;
};

FixedPointReport run_fixed_point_report(const TabularMdp& mdp, const OperatorSpec& op,
                                        const IntegrationSpec& integ, const SearchSpec& search);

// ---- curve report ----------------------------------------------------------

struct CurveReportRow {
  double v_in, v_out, diff;
  bool crossing;  // sign of diff changed since the previous nonzero point
};

std::vector<CurveReportRow> run_curve_report(const TabularMdp& mdp, const OperatorSpec& op,
                                             std::size_t state, std::span<const double> frozen,
                                             const Sweep& sweep, const IntegrationSpec& integ);

// ---- target-variance study -------------------------------------------------

struct VarianceStudyConfig {
  AgentConfig agent;             // training rule and noise of the snapshot
  std::size_t train_budget = 20000;
  std::size_t test_batch = 256;  // transitions whose targets are measured
  std::size_t repetitions = 64;  // noise redraws
  std::size_t fit_rounds = 200;  // regression steps per repetition
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
};

struct VarianceColumn {
  std::string name;
  TargetRule fit_rule;      // rule used while refitting
  TargetRule measure_rule;  // rule whose target is measured
};

// double, db_adp, db_adp-dagger (fit with db_adp, measure double), and the
// clipped counterparts.
std::vector<VarianceColumn> standard_variance_columns();

struct VarianceStudyResult {
  std::vector<VarianceColumn> columns;
  double value_scale = 1.0;  // mean |V*|, at least 1
  std::vector<Transition> test_transitions;
  // std_dev[col][i], normalized by value_scale.
  std::vector<std::vector<double>> std_dev;
  std::vector<double> mean_std;  // per column
};

VarianceStudyResult run_target_variance_study(const TabularMdp& mdp, const VarianceStudyConfig& cfg,
                                              const std::vector<VarianceColumn>& columns);

// ---- agent runs ------------------------------------------------------------

struct AgentRunConfig {
  AgentConfig agent;
  std::size_t budget = 20000;
  std::size_t n_seeds = 1;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
};

struct AgentRunResult {
  std::vector<std::uint64_t> seeds;
  std::vector<AgentResult> runs;
};

AgentRunResult run_agent_seeds(const TabularMdp& mdp, const AgentRunConfig& cfg);

}  // namespace dbql
