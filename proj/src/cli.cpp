#include "dbql/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "dbql/config.hpp"
#include "dbql/errors.hpp"
#include "dbql/experiments.hpp"
#include "dbql/io.hpp"

namespace dbql {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
  std::optional<std::size_t> jobs;
  bool timing = false;
};

struct Command {
  const char* name;        // CLI spelling
  const char* experiment;  // config spelling
  const char* help;
};

const Command kCommands[] = {
    {"fixed-points", "fixed_points", "Locate approximate fixed points of an expected operator"},
    {"curve", "curve", "Response curve of one state's expected output"},
    {"simulate", "simulate", "Soft-update simulation of a stochastic operator"},
    {"density", "density", "Density study of V(s0) over many seeded simulations"},
    {"random-mdp-bench", "random_mdp_bench", "Random-MDP estimation/policy benchmark"},
    {"variance", "variance", "Target-variance study on a trained agent snapshot"},
    {"agent-run", "agent_run", "Run the tabular learning agent over several seeds"},
    {"validate-config", "", "Check a config file against the schema"},
};

std::vector<std::string> state_columns(const char* prefix, std::size_t n) {
  std::vector<std::string> cols;
  for (std::size_t s = 0; s < n; ++s) cols.push_back(prefix + std::to_string(s));
  return cols;
}

CsvCell u(std::size_t x) { return static_cast<std::uint64_t>(x); }

class OutputSet {
 public:
  explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {}
  void write(const std::string& name, const CsvTable& table) {
    write_csv(dir_ / name, table);
    files_.push_back(name);
  }
  const fs::path& dir() const { return dir_; }
  const std::vector<fs::path>& files() const { return files_; }

 private:
  fs::path dir_;
  std::vector<fs::path> files_;
};

void run_fixed_points(const ExperimentConfig& cfg, OutputSet& out) {
  const TabularMdp mdp = config_mdp(cfg);
  const OperatorSpec op = config_operator(cfg, mdp);
  const FixedPointReport report =
      run_fixed_point_report(mdp, op, config_integration(cfg), config_search(cfg));
  std::vector<std::string> header{"index"};
  for (auto& c : state_columns("v_s", mdp.n_states())) header.push_back(c);
  header.insert(header.end(), {"residual", "recheck_residual"});
  for (std::size_t s = 0; s < mdp.n_states(); ++s) {
    for (std::size_t a = 0; a < mdp.n_actions(); ++a) {
      header.push_back("pi_s" + std::to_string(s) + "_a" + std::to_string(a));
    }
  }
  header.insert(header.end(), {"classification", "policy_value_deviation", "start_index", "iterations"});
  CsvTable table(header);
  for (std::size_t i = 0; i < report.rows.size(); ++i) {
    const auto& sol = report.rows[i].solution;
    CsvRow row{u(i)};
    for (double v : sol.v) row.push_back(v);
    row.push_back(sol.residual);
    row.push_back(sol.recheck_residual);
    for (std::size_t s = 0; s < mdp.n_states(); ++s) {
      for (std::size_t a = 0; a < mdp.n_actions(); ++a) row.push_back(sol.induced_policy(s, a));
    }
    row.push_back(std::string(to_string(sol.classification)));
    row.push_back(report.rows[i].policy_value_deviation);
    row.push_back(u(sol.start_index));
    row.push_back(u(sol.iterations));
    table.add(std::move(row));
  }
  out.write("fixed_points.csv", table);
}

void run_curve(const ExperimentConfig& cfg, OutputSet& out) {
  const TabularMdp mdp = config_mdp(cfg);
  const OperatorSpec op = config_operator(cfg, mdp);
  const CurveSpec c = config_curve(cfg, mdp);
  const auto rows = run_curve_report(mdp, op, c.state, c.frozen, c.sweep, config_integration(cfg));
  CsvTable table({"v_in", "v_out", "diff", "crossing"});
  for (const auto& r : rows) table.add({r.v_in, r.v_out, r.diff, u(r.crossing ? 1 : 0)});
  out.write("curve.csv", table);
}

void run_simulate(const ExperimentConfig& cfg, OutputSet& out) {
  const TabularMdp mdp = config_mdp(cfg);
  const SimulationConfig sim = config_simulation(cfg, mdp);
  const SimulationTrace trace = run_tabular_simulation(mdp, sim);
  std::vector<std::string> header{"epoch", "iteration"};
  for (auto& c : state_columns("v_s", mdp.n_states())) header.push_back(c);
  CsvTable table(header);
  for (std::size_t e = 0; e < trace.epochs.size(); ++e) {
    CsvRow row{u(e), u(e * trace.epoch_length)};
    for (double v : trace.epochs[e]) row.push_back(v);
    table.add(std::move(row));
  }
  out.write("trace.csv", table);
}

void run_density(const ExperimentConfig& cfg, OutputSet& out) {
  const TabularMdp mdp = config_mdp(cfg, "two_state");
  const DensityConfig d = config_density(cfg, mdp);
  const DensityResult res = run_density_study(mdp, d);
  CsvTable values({"variant", "epoch", "run", "value"});
  CsvTable hist({"variant", "epoch", "bin", "bin_lo", "bin_hi", "count"});
  CsvTable summary({"variant", "epoch", "stuck_fraction", "escape_fraction"});
  const double width = (res.hist_hi - res.hist_lo) / static_cast<double>(res.hist_bins);
  for (const auto& v : res.variants) {
    for (std::size_t c = 0; c < res.checkpoints.size(); ++c) {
      for (std::size_t r = 0; r < v.values[c].size(); ++r) {
        values.add({v.name, u(res.checkpoints[c]), u(r), v.values[c][r]});
      }
      for (std::size_t b = 0; b < res.hist_bins; ++b) {
        hist.add({v.name, u(res.checkpoints[c]), u(b), res.hist_lo + width * static_cast<double>(b),
                  res.hist_lo + width * static_cast<double>(b + 1), u(v.histogram[c][b])});
      }
      summary.add({v.name, u(res.checkpoints[c]), v.stuck_fraction[c], v.escape_fraction[c]});
    }
  }
  out.write("density_values.csv", values);
  out.write("density_histogram.csv", hist);
  out.write("density_summary.csv", summary);
}

void run_bench(const ExperimentConfig& cfg, OutputSet& out) {
  const BenchmarkResult res = run_random_mdp_benchmark(config_benchmark(cfg));
  CsvTable summary({"method", "k", "estimation_error", "policy_performance"});
  for (const auto& r : res.summary) summary.add({r.method, u(r.k), r.estimation_error, r.policy_performance});
  CsvTable per({"mdp_index", "mdp_seed", "method", "k", "estimation_error", "policy_performance"});
  for (std::size_t i = 0; i < res.per_mdp.size(); ++i) {
    for (const auto& r : res.per_mdp[i].rows) {
      per.add({u(i), res.per_mdp[i].mdp_seed, r.method, u(r.k), r.estimation_error, r.policy_performance});
    }
  }
  out.write("benchmark_summary.csv", summary);
  out.write("benchmark_per_mdp.csv", per);
}

void run_variance(const ExperimentConfig& cfg, OutputSet& out) {
  const TabularMdp mdp = config_mdp(cfg);
  const VarianceStudyConfig v = config_variance(cfg, mdp);
  const VarianceStudyResult res = run_target_variance_study(mdp, v, standard_variance_columns());
  CsvTable summary({"column", "fit_rule", "measure_rule", "mean_normalized_std"});
  for (std::size_t c = 0; c < res.columns.size(); ++c) {
    summary.add({res.columns[c].name, std::string(to_string(res.columns[c].fit_rule)),
                 std::string(to_string(res.columns[c].measure_rule)), res.mean_std[c]});
  }
  std::vector<std::string> header{"index", "state", "action", "reward", "next", "terminal"};
  for (const auto& c : res.columns) header.push_back(c.name);
  CsvTable per(header);
  for (std::size_t i = 0; i < res.test_transitions.size(); ++i) {
    const Transition& t = res.test_transitions[i];
    CsvRow row{u(i), std::get<std::uint64_t>(t.state), u(t.action), t.reward,
               std::get<std::uint64_t>(t.next), u(t.terminal ? 1 : 0)};
    for (std::size_t c = 0; c < res.columns.size(); ++c) row.push_back(res.std_dev[c][i]);
    per.add(std::move(row));
  }
  out.write("variance_summary.csv", summary);
  out.write("variance_transitions.csv", per);
}

void run_agents(const ExperimentConfig& cfg, OutputSet& out) {
  const TabularMdp mdp = config_mdp(cfg);
  const AgentRunConfig c = config_agent_run(cfg, mdp);
  const AgentRunResult res = run_agent_seeds(mdp, c);
  CsvTable curves({"seed", "step", "return", "estimation_error", "policy_performance"});
  CsvTable summary({"seed", "steps_to_optimal", "estimation_error", "policy_performance", "skipped_targets"});
  for (std::size_t i = 0; i < res.runs.size(); ++i) {
    const AgentResult& r = res.runs[i];
    for (const auto& row : r.curve) {
      curves.add({res.seeds[i], u(row.step), row.greedy_return, row.estimation_error, row.policy_performance});
    }
    summary.add({res.seeds[i],
                 r.steps_to_optimal ? CsvCell(u(*r.steps_to_optimal)) : CsvCell(std::string()),
                 r.metrics.estimation_error, r.metrics.policy_performance, u(r.skipped_targets)});
  }
  out.write("agent_curves.csv", curves);
  out.write("agent_summary.csv", summary);
}

void error_line(std::ostream& err, const char* category, const std::string& message,
                const std::string& path = {}) {
  json j = {{"error", category}, {"message", message}};
  if (!path.empty()) j["path"] = path;
  err << j.dump() << "\n";
}

fs::path output_dir(const Options& opt, const char* command) {
  if (!opt.out.empty()) return opt.out;
  if (const char* root = std::getenv("DBQL_OUTPUT_ROOT"); root && *root) return fs::path(root) / command;
  return fs::path("dbql_out") / command;
}

int execute(const Command& cmd, const Options& opt, std::ostream& out) {
  ExperimentConfig cfg;
  if (!opt.config.empty()) cfg = load_config(opt.config, false);
  for (const auto& s : opt.sets) apply_override(cfg, s);
  if (opt.seed) cfg.doc["seed"] = *opt.seed;
  if (opt.jobs) cfg.doc["jobs"] = *opt.jobs;

  const std::string name = cmd.name;
  if (name == "validate-config") {
    validate_config(cfg);
    json ok = {{"valid", true}};
    if (cfg.doc.contains("experiment")) ok["experiment"] = cfg.doc["experiment"];
    out << ok.dump() << "\n";
    return kExitOk;
  }
  if (cfg.doc.contains("experiment") && cfg.doc["experiment"] != cmd.experiment) {
    throw SchemaError("experiment: config is for '" + cfg.doc["experiment"].dump() +
                      "', not " + cmd.experiment);
  }
  validate_config(cfg, cmd.experiment);

  OutputSet files(output_dir(opt, cmd.name));
  const auto start = std::chrono::steady_clock::now();
  if (name == "fixed-points") run_fixed_points(cfg, files);
  else if (name == "curve") run_curve(cfg, files);
  else if (name == "simulate") run_simulate(cfg, files);
  else if (name == "density") run_density(cfg, files);
  else if (name == "random-mdp-bench") run_bench(cfg, files);
  else if (name == "variance") run_variance(cfg, files);
  else if (name == "agent-run") run_agents(cfg, files);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  ManifestInfo info;
  info.subcommand = cmd.name;
  info.seed = config_seed(cfg);
  info.config = cfg.doc;
  info.outputs = files.files();
  if (opt.timing) info.wall_seconds = wall;
  write_manifest(files.dir(), info);

  json summary = {{"out", files.dir().generic_string()}, {"files", json::array()}};
  for (const auto& f : files.files()) summary["files"].push_back(f.generic_string());
  out << summary.dump() << "\n";
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"dbql: stochastic Bellman operators, fixed points and doubly bounded Q-learning"};
  app.set_version_flag("--version", std::string(DBQL_VERSION));
  app.require_subcommand(1);
  app.footer(
      "Environment: DBQL_OUTPUT_ROOT sets the default output root (outputs go to "
      "<root>/<subcommand> unless --out is given); DBQL_SIMD=scalar|avx2 forces a kernel set.");

  Options opt;
  std::vector<std::pair<CLI::App*, const Command*>> subs;
  for (const Command& cmd : kCommands) {
    CLI::App* sub = app.add_subcommand(cmd.name, cmd.help);
    auto* config = sub->add_option("--config", opt.config, "Experiment config (JSON)");
    if (std::string(cmd.name) == "validate-config") {
      config->required();
    } else {
      sub->add_option("--out", opt.out, "Output directory");
      sub->add_option("--jobs", opt.jobs, "Worker threads")->check(CLI::PositiveNumber);
      sub->add_flag("--timing", opt.timing, "Record wall time in the manifest");
    }
    sub->add_option("--seed", opt.seed, "Master seed (overrides the config)");
    sub->add_option("--set", opt.sets, "Override a config value: dotted.key=value (repeatable)");
    subs.emplace_back(sub, &cmd);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    out << DBQL_VERSION << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    error_line(err, "usage", e.what());
    return kExitUsage;
  }

  for (const auto& [sub, cmd] : subs) {
    if (!sub->parsed()) continue;
    try {
      return execute(*cmd, opt, out);
    } catch (const SchemaError& e) {
      error_line(err, "schema", e.what());
      return kExitSchema;
    } catch (const ContractViolation& e) {
      error_line(err, "schema", e.what());
      return kExitSchema;
    } catch (const UnsupportedConfiguration& e) {
      error_line(err, "unsupported", e.what());
      return kExitUnsupported;
    } catch (const IoError& e) {
      error_line(err, "io", e.what(), e.path());
      return kExitIo;
    } catch (const std::exception& e) {
      error_line(err, "internal", e.what());
      return kExitInternal;
    }
  }
  error_line(err, "usage", "no subcommand given");
  return kExitUsage;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace dbql
