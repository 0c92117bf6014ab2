#pragma once

// Experiment configuration documents.
//
// A config is a JSON object; every key is checked against the schema below
// and unknown keys are rejected. The validated document is kept verbatim, so
// serializing a parsed config reproduces its keys and values. Typed objects
// are built on demand with defaults for absent keys.
//
//   experiment   string, optional: fixed_points | curve | simulate | density |
//                random_mdp_bench | variance | agent_run
//   seed, jobs   unsigned integers
//   mdp          {builder: two_state | clipped_bad_case | random, n_states,
//                 n_actions, branching, seed, discount} | {inline: <mdp>} |
//                {file: path}
//   operator     {kind: noisy_max | double | clipped_double, noise} |
//                {kind: doubly_bounded, inner: <operator>, dp_floor: [x|null]}
//   noise        {kind: zero | uniform | gaussian, scale}
//   integration  {method: quadrature | monte_carlo, nodes_or_samples, seed}
//   search       {lo, hi, n_starts, damping, tol, dedup_radius,
//                 max_iterations, seed, newton}
//   curve        {state, frozen, lo, hi, n_points}
//   simulation   {alpha, n_iterations | n_epochs, initial_value, initial_table}
//   density      {variants: "standard" | [{name, operator}], sigma, alpha,
//                 initial_value, n_runs, checkpoints, tracked_state,
//                 stuck_threshold, hist_lo, hist_hi, hist_bins}
//   benchmark    {n_mdps, n_states, n_actions, branching, ks, iterations,
//                 noise, alpha, initial_value}
//   agent        {target_rule, noise, exploration_rate, target_refresh_period,
//                 buffer_capacity, multistep_horizon, learning_rate,
//                 batch_size, episode_length, start_state, initial_q,
//                 eval_period}
//   agent_run    {budget, n_seeds}
//   variance     {train_budget, test_batch, repetitions, fit_rounds}

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "dbql/experiments.hpp"

namespace dbql {

struct ExperimentConfig {
  nlohmann::json doc = nlohmann::json::object();
  std::filesystem::path base_dir;  // for relative mdp.file paths

  friend bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    return a.doc == b.doc;
  }
};

// Throw SchemaError on malformed text or schema violations (the schema check
// can be deferred, e.g. until overrides are applied).
ExperimentConfig parse_config(std::string_view text, bool validate = true);
ExperimentConfig load_config(const std::filesystem::path& path, bool validate = true);
std::string serialize_config(const ExperimentConfig& cfg);

// "a.b.c=value": value is parsed as JSON when possible, else taken as a
// string. Missing objects along the path are created.
void apply_override(ExperimentConfig& cfg, std::string_view assignment);

// Checks every present section, and that the sections `experiment` needs
// are there.
void validate_config(const ExperimentConfig& cfg);
void validate_config(const ExperimentConfig& cfg, std::string_view experiment);

std::uint64_t config_seed(const ExperimentConfig& cfg);
std::size_t config_jobs(const ExperimentConfig& cfg);

TabularMdp config_mdp(const ExperimentConfig& cfg, const char* fallback_builder = nullptr);
NoiseModel parse_noise(const nlohmann::json& j, const std::string& where);
OperatorSpec parse_operator(const nlohmann::json& j, const TabularMdp& mdp, const std::string& where);
OperatorSpec config_operator(const ExperimentConfig& cfg, const TabularMdp& mdp);
IntegrationSpec config_integration(const ExperimentConfig& cfg);
SearchSpec config_search(const ExperimentConfig& cfg);

struct CurveSpec {
  std::size_t state = 0;
  StateValues frozen;
  Sweep sweep;
};
CurveSpec config_curve(const ExperimentConfig& cfg, const TabularMdp& mdp);
SimulationConfig config_simulation(const ExperimentConfig& cfg, const TabularMdp& mdp);
DensityConfig config_density(const ExperimentConfig& cfg, const TabularMdp& mdp);
BenchmarkConfig config_benchmark(const ExperimentConfig& cfg);
AgentConfig config_agent(const ExperimentConfig& cfg, const TabularMdp& mdp);
AgentRunConfig config_agent_run(const ExperimentConfig& cfg, const TabularMdp& mdp);
VarianceStudyConfig config_variance(const ExperimentConfig& cfg, const TabularMdp& mdp);

}  // namespace dbql
