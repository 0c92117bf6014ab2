#include "dbql/config.hpp"

#include <cmath>
#include <limits>
#include <set>

#include "dbql/errors.hpp"
#include "dbql/io.hpp"
#include "dbql/mdp_json.hpp"

namespace dbql {

using nlohmann::json;

namespace {

[[noreturn]] void schema_fail(const std::string& where, const std::string& what) {
  throw SchemaError(where + ": " + what);
}

// Reads keys off one object, remembering which were consumed so that
// leftovers can be reported as unknown.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) schema_fail(where_, "expected an object");
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  const json& raw(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

  std::string at(const char* key) const { return where_ + "." + key; }

  double number(const char* key, double def) {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_number()) schema_fail(at(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) schema_fail(at(key), "expected a finite number");
    return x;
  }

  std::uint64_t count(const char* key, std::uint64_t def) {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
      schema_fail(at(key), "expected a nonnegative integer");
    }
    return v.get<std::uint64_t>();
  }

  bool flag(const char* key, bool def) {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_boolean()) schema_fail(at(key), "expected true or false");
    return v.get<bool>();
  }

  std::string text(const char* key, const std::string& def) {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_string()) schema_fail(at(key), "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const char* key) {
    std::vector<double> out;
    if (!has(key)) return out;
    const json& v = j_.at(key);
    if (!v.is_array()) schema_fail(at(key), "expected an array of numbers");
    for (const auto& x : v) {
      if (!x.is_number() || !std::isfinite(x.get<double>())) {
        schema_fail(at(key), "expected an array of finite numbers");
      }
      out.push_back(x.get<double>());
    }
    return out;
  }

  std::vector<std::size_t> counts(const char* key, std::vector<std::size_t> def) {
    if (!has(key)) return def;
    const json& v = j_.at(key);
    if (!v.is_array()) schema_fail(at(key), "expected an array of integers");
    std::vector<std::size_t> out;
    for (const auto& x : v) {
      if (!x.is_number_unsigned()) schema_fail(at(key), "expected an array of nonnegative integers");
      out.push_back(x.get<std::size_t>());
    }
    return out;
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!seen_.count(item.key())) schema_fail(where_ + "." + item.key(), "unknown key");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

void check(bool ok, const std::string& where, const std::string& what) {
  if (!ok) schema_fail(where, what);
}

const json* section(const ExperimentConfig& cfg, const char* name) {
  const auto it = cfg.doc.find(name);
  return it == cfg.doc.end() ? nullptr : &*it;
}

const json& empty_object() {
  static const json j = json::object();
  return j;
}

const json& section_or_empty(const ExperimentConfig& cfg, const char* name) {
  const json* s = section(cfg, name);
  return s ? *s : empty_object();
}

template <class F>
auto wrap_contract(const std::string& where, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ContractViolation& e) {
    schema_fail(where, e.what());
  }
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{"fixed_points", "curve",    "simulate", "density",
                                              "random_mdp_bench", "variance", "agent_run"};
  return names;
}

}  // namespace

namespace {

ExperimentConfig parse_unchecked(std::string_view text) {
  ExperimentConfig cfg;
  try {
    cfg.doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("config: not valid JSON: ") + e.what());
  }
  if (!cfg.doc.is_object()) throw SchemaError("config: top level must be an object");
  return cfg;
}

}  // namespace

ExperimentConfig parse_config(std::string_view text, bool validate) {
  ExperimentConfig cfg = parse_unchecked(text);
  if (validate) validate_config(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, bool validate) {
  ExperimentConfig cfg = parse_unchecked(read_text_file(path));
  cfg.base_dir = path.parent_path();
  if (validate) validate_config(cfg);
  return cfg;
}

std::string serialize_config(const ExperimentConfig& cfg) { return cfg.doc.dump(2) + "\n"; }

void apply_override(ExperimentConfig& cfg, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw SchemaError("override '" + std::string(assignment) + "': expected key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string value(assignment.substr(eq + 1));
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::parse_error&) {
    parsed = value;
  }
  json* node = &cfg.doc;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw SchemaError("override '" + key + "': empty path segment");
    json* child;
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        idx = std::stoul(part);
      } catch (const std::exception&) {
        throw SchemaError("override '" + key + "': '" + part + "' is not an array index");
      }
      if (idx >= node->size()) throw SchemaError("override '" + key + "': index out of range");
      child = &(*node)[idx];
    } else {
      if (!node->is_object()) *node = json::object();
      child = &(*node)[part];
    }
    if (dot == std::string::npos) {
      *child = parsed;
      return;
    }
    node = child;
    start = dot + 1;
  }
}

std::uint64_t config_seed(const ExperimentConfig& cfg) {
  const json* s = section(cfg, "seed");
  if (!s) return 0;
  if (!s->is_number_unsigned()) schema_fail("seed", "expected a nonnegative integer");
  return s->get<std::uint64_t>();
}

std::size_t config_jobs(const ExperimentConfig& cfg) {
  const json* s = section(cfg, "jobs");
  if (!s) return 1;
  if (!s->is_number_unsigned() || s->get<std::uint64_t>() == 0) {
    schema_fail("jobs", "expected a positive integer");
  }
  return s->get<std::size_t>();
}

TabularMdp config_mdp(const ExperimentConfig& cfg, const char* fallback_builder) {
  const json* s = section(cfg, "mdp");
  json fallback;
  if (!s) {
    if (!fallback_builder) schema_fail("mdp", "section is required");
    fallback = {{"builder", fallback_builder}};
    s = &fallback;
  }
  Reader r(*s, "mdp");
  if (r.has("inline")) {
    const json& doc = r.raw("inline");
    r.finish();
    try {
      return mdp_from_json(doc);
    } catch (const SchemaError& e) {
      schema_fail("mdp.inline", e.what());
    }
  }
  if (r.has("file")) {
    const std::string file = r.text("file", "");
    r.finish();
    std::filesystem::path p(file);
    if (p.is_relative()) p = cfg.base_dir / p;
    json doc;
    try {
      doc = json::parse(read_text_file(p));
    } catch (const json::parse_error& e) {
      schema_fail("mdp.file", std::string("not valid JSON: ") + e.what());
    }
    try {
      return mdp_from_json(doc);
    } catch (const SchemaError& e) {
      schema_fail("mdp.file", e.what());
    }
  }
  const std::string builder = r.text("builder", "");
  if (builder == "two_state" || builder == "clipped_bad_case") {
    r.finish();
    return builder == "two_state" ? build_two_state_mdp() : build_clipped_bad_case();
  }
  if (builder == "random") {
    const std::size_t ns = r.count("n_states", 10);
    const std::size_t na = r.count("n_actions", 5);
    const std::size_t br = r.count("branching", 5);
    const std::uint64_t seed = r.count("seed", 0);
    const double discount = r.number("discount", 0.99);
    r.finish();
    check(ns >= 1 && na >= 1, "mdp", "random MDP needs at least one state and one action");
    check(br >= 1 && br <= ns, "mdp.branching", "must lie in [1, n_states]");
    check(discount >= 0.0 && discount < 1.0, "mdp.discount", "must lie in [0, 1)");
    return wrap_contract("mdp", [&] { return random_mdp(ns, na, br, seed, discount); });
  }
  schema_fail("mdp.builder", "expected two_state, clipped_bad_case or random (or inline / file)");
}

NoiseModel parse_noise(const json& j, const std::string& where) {
  Reader r(j, where);
  const std::string kind = r.text("kind", "");
  const double scale = r.number("scale", 0.0);
  r.finish();
  check(scale >= 0.0, where + ".scale", "must be nonnegative");
  if (kind == "zero") return NoiseModel::zero();
  if (kind == "uniform") return NoiseModel::uniform(scale);
  if (kind == "gaussian") return NoiseModel::gaussian(scale);
  schema_fail(where + ".kind", "expected zero, uniform or gaussian");
}

OperatorSpec parse_operator(const json& j, const TabularMdp& mdp, const std::string& where) {
  Reader r(j, where);
  const std::string kind = r.text("kind", "");
  if (kind == "doubly_bounded") {
    check(r.has("inner"), where + ".inner", "required for doubly_bounded");
    const json& inner_doc = r.raw("inner");
    check(r.has("dp_floor"), where + ".dp_floor", "required for doubly_bounded");
    const json& floor_doc = r.raw("dp_floor");
    r.finish();
    const OperatorSpec inner = parse_operator(inner_doc, mdp, where + ".inner");
    check(inner.kind() != OperatorKind::doubly_bounded, where + ".inner",
          "must be a bootstrap operator, not doubly_bounded");
    check(floor_doc.is_array() && floor_doc.size() == mdp.n_states(), where + ".dp_floor",
          "expected one entry (number or null) per state");
    StateValues floor;
    for (const auto& x : floor_doc) {
      if (x.is_null()) {
        floor.push_back(-std::numeric_limits<double>::infinity());
      } else if (x.is_number() && std::isfinite(x.get<double>())) {
        floor.push_back(x.get<double>());
      } else {
        schema_fail(where + ".dp_floor", "entries must be finite numbers or null");
      }
    }
    return OperatorSpec::doubly_bounded(inner, floor);
  }
  check(r.has("noise"), where + ".noise", "required");
  const NoiseModel noise = parse_noise(r.raw("noise"), where + ".noise");
  r.finish();
  if (kind == "noisy_max") return OperatorSpec::noisy_max(noise);
  if (kind == "double") return OperatorSpec::double_q(noise);
  if (kind == "clipped_double") return OperatorSpec::clipped_double(noise);
  schema_fail(where + ".kind", "expected noisy_max, double, clipped_double or doubly_bounded");
}

OperatorSpec config_operator(const ExperimentConfig& cfg, const TabularMdp& mdp) {
  const json* s = section(cfg, "operator");
  if (!s) schema_fail("operator", "section is required");
  return parse_operator(*s, mdp, "operator");
}

IntegrationSpec config_integration(const ExperimentConfig& cfg) {
  Reader r(section_or_empty(cfg, "integration"), "integration");
  const std::string method = r.text("method", "quadrature");
  const std::size_t n = r.count("nodes_or_samples", method == "monte_carlo" ? 1000000 : 64);
  const std::uint64_t seed = r.count("seed", 0);
  r.finish();
  check(n >= 2, "integration.nodes_or_samples", "must be at least 2");
  if (method == "quadrature") return IntegrationSpec::quadrature(n);
  if (method == "monte_carlo") return IntegrationSpec::monte_carlo(n, seed);
  schema_fail("integration.method", "expected quadrature or monte_carlo");
}

SearchSpec config_search(const ExperimentConfig& cfg) {
  Reader r(section_or_empty(cfg, "search"), "search");
  SearchSpec s;
  s.lo = r.numbers("lo");
  s.hi = r.numbers("hi");
  s.n_starts = r.count("n_starts", s.n_starts);
  s.damping = r.number("damping", s.damping);
  s.tol = r.number("tol", s.tol);
  s.dedup_radius = r.number("dedup_radius", s.dedup_radius);
  s.max_iterations = r.count("max_iterations", s.max_iterations);
  s.seed = r.count("seed", config_seed(cfg));
  s.newton = r.flag("newton", s.newton);
  r.finish();
  s.jobs = config_jobs(cfg);
  check(s.lo.size() == s.hi.size(), "search", "lo and hi must have the same length");
  check(s.n_starts >= 1, "search.n_starts", "must be at least 1");
  check(s.damping > 0.0 && s.damping <= 1.0, "search.damping", "must lie in (0, 1]");
  check(s.tol > 0.0, "search.tol", "must be positive");
  check(s.dedup_radius >= 0.0, "search.dedup_radius", "must be nonnegative");
  for (std::size_t i = 0; i < s.lo.size(); ++i) {
    check(s.lo[i] <= s.hi[i], "search", "lo must not exceed hi");
  }
  return s;
}

CurveSpec config_curve(const ExperimentConfig& cfg, const TabularMdp& mdp) {
  const json* sec = section(cfg, "curve");
  if (!sec) schema_fail("curve", "section is required");
  Reader r(*sec, "curve");
  CurveSpec c;
  c.state = r.count("state", 0);
  c.frozen = r.numbers("frozen");
  c.sweep.lo = r.number("lo", 0.0);
  c.sweep.hi = r.number("hi", 0.0);
  c.sweep.n_points = r.count("n_points", 401);
  r.finish();
  check(c.state < mdp.n_states(), "curve.state", "out of range");
  if (c.frozen.empty()) c.frozen = value_iteration(mdp).v;
  check(c.frozen.size() == mdp.n_states(), "curve.frozen", "expected one value per state");
  check(c.sweep.lo <= c.sweep.hi, "curve", "lo must not exceed hi");
  check(c.sweep.n_points >= 2, "curve.n_points", "must be at least 2");
  return c;
}

SimulationConfig config_simulation(const ExperimentConfig& cfg, const TabularMdp& mdp) {
  Reader r(section_or_empty(cfg, "simulation"), "simulation");
  SimulationConfig s;
  s.op = config_operator(cfg, mdp);
  s.alpha = r.number("alpha", 0.01);
  check(s.alpha > 0.0 && s.alpha <= 1.0, "simulation.alpha", "must lie in (0, 1]");
  const bool by_iter = r.has("n_iterations");
  const bool by_epoch = r.has("n_epochs");
  check(!(by_iter && by_epoch), "simulation", "give n_iterations or n_epochs, not both");
  if (by_epoch) {
    s.n_iterations = r.count("n_epochs", 20) * epoch_length(s.alpha, mdp.discount());
  } else {
    s.n_iterations = r.count("n_iterations", 20 * epoch_length(s.alpha, mdp.discount()));
  }
  s.initial_value = r.number("initial_value", 0.0);
  s.initial_table = r.numbers("initial_table");
  r.finish();
  check(s.initial_table.empty() || s.initial_table.size() == mdp.n_states(),
        "simulation.initial_table", "expected one value per state");
  s.seed = config_seed(cfg);
  return s;
}

DensityConfig config_density(const ExperimentConfig& cfg, const TabularMdp& mdp) {
  Reader r(section_or_empty(cfg, "density"), "density");
  DensityConfig d;
  const double sigma = r.number("sigma", 0.5);
  check(sigma >= 0.0, "density.sigma", "must be nonnegative");
  if (r.has("variants") && !r.raw("variants").is_string()) {
    const json& vs = r.raw("variants");
    check(vs.is_array() && !vs.empty(), "density.variants", "expected \"standard\" or a nonempty array");
    for (std::size_t i = 0; i < vs.size(); ++i) {
      const std::string where = "density.variants." + std::to_string(i);
      Reader vr(vs[i], where);
      const std::string name = vr.text("name", "");
      check(!name.empty(), where + ".name", "required");
      check(vr.has("operator"), where + ".operator", "required");
      const OperatorSpec op = parse_operator(vr.raw("operator"), mdp, where + ".operator");
      vr.finish();
      d.variants.push_back({name, op});
    }
  } else {
    const std::string v = r.text("variants", "standard");
    check(v == "standard", "density.variants", "expected \"standard\" or an array");
    d.variants = standard_density_variants(mdp, sigma);
  }
  d.alpha = r.number("alpha", d.alpha);
  d.initial_value = r.number("initial_value", d.initial_value);
  d.n_runs = r.count("n_runs", d.n_runs);
  d.checkpoints = r.counts("checkpoints", d.checkpoints);
  d.tracked_state = r.count("tracked_state", d.tracked_state);
  d.stuck_threshold = r.number("stuck_threshold", d.stuck_threshold);
  d.hist_lo = r.number("hist_lo", d.hist_lo);
  d.hist_hi = r.number("hist_hi", d.hist_hi);
  d.hist_bins = r.count("hist_bins", d.hist_bins);
  r.finish();
  check(d.alpha > 0.0 && d.alpha <= 1.0, "density.alpha", "must lie in (0, 1]");
  check(d.n_runs >= 1, "density.n_runs", "must be at least 1");
  check(!d.checkpoints.empty(), "density.checkpoints", "must be nonempty");
  check(d.tracked_state < mdp.n_states(), "density.tracked_state", "out of range");
  check(d.hist_hi > d.hist_lo && d.hist_bins >= 1, "density", "histogram needs hi > lo and bins >= 1");
  d.seed = config_seed(cfg);
  d.jobs = config_jobs(cfg);
  return d;
}

BenchmarkConfig config_benchmark(const ExperimentConfig& cfg) {
  Reader r(section_or_empty(cfg, "benchmark"), "benchmark");
  BenchmarkConfig b;
  b.n_mdps = r.count("n_mdps", b.n_mdps);
  b.n_states = r.count("n_states", b.n_states);
  b.n_actions = r.count("n_actions", b.n_actions);
  b.branching = r.count("branching", b.branching);
  b.ks = r.counts("ks", b.ks);
  b.iterations = r.count("iterations", b.iterations);
  if (r.has("noise")) b.noise = parse_noise(r.raw("noise"), "benchmark.noise");
  b.alpha = r.number("alpha", b.alpha);
  b.initial_value = r.number("initial_value", b.initial_value);
  r.finish();
  check(b.n_mdps >= 1, "benchmark.n_mdps", "must be at least 1");
  check(b.n_states >= 1 && b.n_actions >= 1, "benchmark", "need at least one state and action");
  check(b.branching >= 1 && b.branching <= b.n_states, "benchmark.branching", "must lie in [1, n_states]");
  for (std::size_t k : b.ks) check(k >= 1, "benchmark.ks", "entries must be at least 1");
  check(b.alpha > 0.0 && b.alpha <= 1.0, "benchmark.alpha", "must lie in (0, 1]");
  b.seed = config_seed(cfg);
  b.jobs = config_jobs(cfg);
  return b;
}

AgentConfig config_agent(const ExperimentConfig& cfg, const TabularMdp& mdp) {
  Reader r(section_or_empty(cfg, "agent"), "agent");
  AgentConfig a;
  const std::string rule = r.text("target_rule", to_string(a.target_rule));
  const auto parsed = parse_target_rule(rule);
  check(parsed.has_value(), "agent.target_rule",
        "expected q, double, clipped_double, db_adp, db_adp_c, adp_only or multistep");
  a.target_rule = *parsed;
  if (r.has("noise")) a.noise = parse_noise(r.raw("noise"), "agent.noise");
  a.exploration_rate = r.number("exploration_rate", a.exploration_rate);
  a.target_refresh_period = r.count("target_refresh_period", a.target_refresh_period);
  a.buffer_capacity = r.count("buffer_capacity", a.buffer_capacity);
  a.multistep_horizon = r.count("multistep_horizon", a.multistep_horizon);
  a.learning_rate = r.number("learning_rate", a.learning_rate);
  a.batch_size = r.count("batch_size", a.batch_size);
  a.episode_length = r.count("episode_length", a.episode_length);
  a.start_state = r.count("start_state", a.start_state);
  a.initial_q = r.number("initial_q", a.initial_q);
  a.eval_period = r.count("eval_period", a.eval_period);
  r.finish();
  a.seed = config_seed(cfg);
  wrap_contract("agent", [&] {
    a.validate(mdp);
    return 0;
  });
  return a;
}

AgentRunConfig config_agent_run(const ExperimentConfig& cfg, const TabularMdp& mdp) {
  Reader r(section_or_empty(cfg, "agent_run"), "agent_run");
  AgentRunConfig c;
  c.agent = config_agent(cfg, mdp);
  c.budget = r.count("budget", c.budget);
  c.n_seeds = r.count("n_seeds", c.n_seeds);
  r.finish();
  check(c.budget >= 1, "agent_run.budget", "must be at least 1");
  check(c.n_seeds >= 1, "agent_run.n_seeds", "must be at least 1");
  c.seed = config_seed(cfg);
  c.jobs = config_jobs(cfg);
  return c;
}

VarianceStudyConfig config_variance(const ExperimentConfig& cfg, const TabularMdp& mdp) {
  Reader r(section_or_empty(cfg, "variance"), "variance");
  VarianceStudyConfig v;
  v.agent = config_agent(cfg, mdp);
  if (!section(cfg, "agent") || !section(cfg, "agent")->contains("target_rule")) {
    v.agent.target_rule = TargetRule::db_adp;
  }
  v.train_budget = r.count("train_budget", v.train_budget);
  v.test_batch = r.count("test_batch", v.test_batch);
  v.repetitions = r.count("repetitions", v.repetitions);
  v.fit_rounds = r.count("fit_rounds", v.fit_rounds);
  r.finish();
  check(v.train_budget >= 1, "variance.train_budget", "must be at least 1");
  check(v.test_batch >= 1, "variance.test_batch", "must be at least 1");
  check(v.repetitions >= 2, "variance.repetitions", "must be at least 2");
  v.seed = config_seed(cfg);
  v.jobs = config_jobs(cfg);
  return v;
}

void validate_config(const ExperimentConfig& cfg) {
  const json* e = section(cfg, "experiment");
  std::string experiment;
  if (e) {
    if (!e->is_string()) schema_fail("experiment", "expected a string");
    experiment = e->get<std::string>();
  }
  validate_config(cfg, experiment);
}

void validate_config(const ExperimentConfig& cfg, std::string_view experiment) {
  if (!cfg.doc.is_object()) throw SchemaError("config: top level must be an object");
  static const std::set<std::string> known{"experiment", "seed",      "jobs",    "mdp",
                                           "operator",   "integration", "search", "curve",
                                           "simulation", "density",   "benchmark", "agent",
                                           "agent_run",  "variance"};
  for (const auto& item : cfg.doc.items()) {
    if (!known.count(item.key())) schema_fail(item.key(), "unknown key");
  }
  if (!experiment.empty()) {
    const auto& names = experiment_names();
    if (std::find(names.begin(), names.end(), experiment) == names.end()) {
      schema_fail("experiment", "unknown experiment '" + std::string(experiment) + "'");
    }
  }
  config_seed(cfg);
  config_jobs(cfg);
  config_integration(cfg);
  config_search(cfg);
  config_benchmark(cfg);

  const bool needs_mdp = experiment == "fixed_points" || experiment == "curve" ||
                         experiment == "simulate" || experiment == "variance" ||
                         experiment == "agent_run";
  const bool needs_op = experiment == "fixed_points" || experiment == "curve" || experiment == "simulate";
  if (!section(cfg, "mdp") && !needs_mdp && experiment != "density") {
    // No MDP: the MDP-dependent sections cannot be checked beyond their keys.
    for (const char* s : {"operator", "curve", "simulation", "density", "agent", "agent_run", "variance"}) {
      if (section(cfg, s)) schema_fail(s, "needs an mdp section to be validated");
    }
    return;
  }
  const TabularMdp mdp = config_mdp(cfg, experiment == "density" ? "two_state" : nullptr);
  if (needs_op || section(cfg, "operator")) config_operator(cfg, mdp);
  if (experiment == "curve" || section(cfg, "curve")) config_curve(cfg, mdp);
  if (experiment == "simulate" || section(cfg, "simulation")) config_simulation(cfg, mdp);
  if (experiment == "density" || section(cfg, "density")) config_density(cfg, mdp);
  if (section(cfg, "agent")) config_agent(cfg, mdp);
  if (experiment == "agent_run" || section(cfg, "agent_run")) config_agent_run(cfg, mdp);
  if (experiment == "variance" || section(cfg, "variance")) config_variance(cfg, mdp);
}

}  // namespace dbql
