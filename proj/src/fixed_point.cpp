#include "dbql/fixed_point.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "dbql/errors.hpp"
#include "dbql/parallel.hpp"
#include "dbql/quadrature.hpp"
#include "dbql/rng.hpp"

namespace dbql {

const char* to_string(IntegrationMethod m) {
  return m == IntegrationMethod::quadrature ? "quadrature" : "monte_carlo";
}

const char* to_string(Classification c) {
  return c == Classification::optimal ? "optimal" : "non_optimal";
}

IntegrationSpec IntegrationSpec::quadrature(std::size_t nodes) {
  IntegrationSpec spec{IntegrationMethod::quadrature, nodes, 0};
  spec.validate();
  return spec;
}

IntegrationSpec IntegrationSpec::monte_carlo(std::size_t samples, std::uint64_t seed) {
  IntegrationSpec spec{IntegrationMethod::monte_carlo, samples, seed};
  spec.validate();
  return spec;
}

IntegrationSpec IntegrationSpec::refined() const {
  IntegrationSpec spec = *this;
  spec.nodes_or_samples *= 2;
  return spec;
}

void IntegrationSpec::validate() const {
  require(nodes_or_samples >= 2, "integration: need at least 2 nodes or samples");
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double effective_floor(const OperatorSpec& op, double floor) {
  return op.has_floor() ? floor : kNegInf;
}

// Break points of the conditional integrand for winner a, in the e-domain.
void winner_breaks(const NoiseModel& noise, std::span<const double> x, std::size_t a, double floor,
                   std::vector<double>& breaks) {
  breaks.clear();
  const double s = noise.scale();
  for (std::size_t b = 0; b < x.size(); ++b) {
    if (b == a) continue;
    const double gap = x[b] - x[a];
    if (noise.kind() == NoiseModel::Kind::uniform) {
      breaks.push_back(gap - s);
      breaks.push_back(gap + s);
    } else {
      breaks.push_back(gap);
    }
  }
  if (noise.kind() == NoiseModel::Kind::gaussian) {
    breaks.push_back(-4.0 * s);
    breaks.push_back(0.0);
    breaks.push_back(4.0 * s);
  }
  if (floor > kNegInf) breaks.push_back(floor - x[a]);
}

// Density of "a wins with first-table noise e" as a function of e.
struct WinnerWeight {
  const NoiseModel& noise;
  std::span<const double> x;
  std::size_t a;

  double operator()(double e) const {
    double w = noise.pdf(e);
    if (w == 0.0) return 0.0;
    const double xa = x[a] + e;
    for (std::size_t b = 0; b < x.size(); ++b) {
      if (b != a) w *= noise.cdf(xa - x[b]);
    }
    return w;
  }
};

// Lower end of the e-range where a can win at all.
double winner_lower_limit(const NoiseModel& noise, std::span<const double> x, std::size_t a) {
  double lo = noise.support_lo();
  for (std::size_t b = 0; b < x.size(); ++b) {
    if (b != a) lo = std::max(lo, x[b] - x[a] + noise.support_lo());
  }
  return lo;
}

double quadrature_state(const OperatorSpec& op, std::span<const double> x, double floor,
                        std::size_t nodes) {
  const NoiseModel& noise = op.noise();
  const OperatorKind kind = op.bootstrap().kind();
  const double hi = noise.support_hi();
  std::vector<double> breaks;
  double total = 0.0;
  for (std::size_t a = 0; a < x.size(); ++a) {
    const double lo = winner_lower_limit(noise, x, a);
    if (lo >= hi) continue;
    winner_breaks(noise, x, a, floor, breaks);
    const WinnerWeight weight{noise, x, a};
    const double xa = x[a];
    const double d = floor - xa;
    switch (kind) {
      case OperatorKind::noisy_max:
        total += quad::integrate(
            [&](double e) { return weight(e) * std::max(xa + e, floor); }, lo, hi, breaks, nodes);
        break;
      case OperatorKind::double_q: {
        const double p = quad::integrate(weight, lo, hi, breaks, nodes);
        const double tail = floor > kNegInf ? noise.expected_max(d) : 0.0;
        total += p * (xa + tail);
        break;
      }
      case OperatorKind::clipped_double:
        total += quad::integrate(
            [&](double e) {
              double inner;
              if (floor == kNegInf) {
                inner = noise.expected_min(e);
              } else {
                inner = e <= d ? d : noise.expected_clamp(d, e);
              }
              return weight(e) * (xa + inner);
            },
            lo, hi, breaks, nodes);
        break;
      case OperatorKind::doubly_bounded:
        contract_fail("expected_state_output: nested doubly bounded operator");
    }
  }
  return total;
}

double monte_carlo_state(const OperatorSpec& op, std::span<const double> x, double floor,
                         const IntegrationSpec& integ, std::uint64_t stream) {
  RandomStream rng(derive_seed(integ.seed, stream));
  const std::size_t na = x.size();
  const std::size_t k = op.noise_tables();
  const std::size_t n = integ.nodes_or_samples;
  const std::size_t batch = std::min<std::size_t>(n, 1024);
  std::vector<double> buf(batch * k * na);
  double sum = 0.0;
  for (std::size_t done = 0; done < n;) {
    const std::size_t m = std::min(batch, n - done);
    op.noise().sample(rng, std::span<double>(buf.data(), m * k * na));
    for (std::size_t j = 0; j < m; ++j) {
      const std::span<const double> e1(buf.data() + j * k * na, na);
      const std::span<const double> e2 = k == 2 ? std::span<const double>(e1.data() + na, na) : e1;
      sum += operator_state(op, x, e1, e2, floor).value;
    }
    done += m;
  }
  return sum / static_cast<double>(n);
}

}  // namespace

double expected_state_output(const OperatorSpec& op, std::span<const double> x, double floor,
                             const IntegrationSpec& integ, std::uint64_t stream) {
  integ.validate();
  require(!x.empty(), "expected_state_output: no actions");
  if (op.noise().is_zero()) {
    const std::vector<double> zeros(x.size(), 0.0);
    return operator_state(op, x, zeros, zeros, floor).value;
  }
  if (integ.method == IntegrationMethod::monte_carlo) {
    return monte_carlo_state(op, x, floor, integ, stream);
  }
  return quadrature_state(op, x, effective_floor(op, floor), integ.nodes_or_samples);
}

std::vector<double> selection_probabilities(std::span<const double> x, const NoiseModel& noise,
                                            const IntegrationSpec& integ, std::uint64_t stream) {
  integ.validate();
  require(!x.empty(), "selection_probabilities: no actions");
  std::vector<double> p(x.size(), 0.0);
  if (noise.is_zero()) {
    p[argmax(x)] = 1.0;
    return p;
  }
  if (integ.method == IntegrationMethod::monte_carlo) {
    RandomStream rng(derive_seed(integ.seed, stream));
    const std::size_t n = integ.nodes_or_samples;
    const std::size_t na = x.size();
    const std::size_t batch = std::min<std::size_t>(n, 1024);
    std::vector<double> buf(batch * na);
    std::vector<double> counts(na, 0.0);
    for (std::size_t done = 0; done < n;) {
      const std::size_t m = std::min(batch, n - done);
      noise.sample(rng, std::span<double>(buf.data(), m * na));
      for (std::size_t j = 0; j < m; ++j) {
        counts[noisy_max_state(x, std::span<const double>(buf.data() + j * na, na)).selected] += 1.0;
      }
      done += m;
    }
    for (std::size_t a = 0; a < na; ++a) p[a] = counts[a] / static_cast<double>(n);
    return p;
  }
  const double hi = noise.support_hi();
  std::vector<double> breaks;
  double total = 0.0;
  for (std::size_t a = 0; a < x.size(); ++a) {
    const double lo = winner_lower_limit(noise, x, a);
    if (lo >= hi) continue;
    winner_breaks(noise, x, a, kNegInf, breaks);
    p[a] = quad::integrate(WinnerWeight{noise, x, a}, lo, hi, breaks, integ.nodes_or_samples);
    total += p[a];
  }
  for (double& q : p) q /= total;
  return p;
}

StateValues expected_operator(const TabularMdp& mdp, std::span<const double> v,
                              const OperatorSpec& op, const IntegrationSpec& integ) {
  require(v.size() == mdp.n_states(), "expected_operator: value vector does not match state count");
  if (op.has_floor()) {
    require(op.dp_floor().size() == mdp.n_states(),
            "expected_operator: floor does not match state count");
  }
  const QTable x = backup(mdp, v);
  StateValues out(mdp.n_states());
  for (std::size_t s = 0; s < mdp.n_states(); ++s) {
    if (mdp.is_absorbing(s)) {
      out[s] = 0.0;
      continue;
    }
    const double floor = op.has_floor() ? op.dp_floor()[s] : 0.0;
    out[s] = expected_state_output(op, x.row(s), floor, integ, s);
  }
  return out;
}

StochasticPolicy induced_policy(const TabularMdp& mdp, std::span<const double> v,
                                const NoiseModel& noise, const IntegrationSpec& integ) {
  require(v.size() == mdp.n_states(), "induced_policy: value vector does not match state count");
  const QTable x = backup(mdp, v);
  std::vector<double> probs;
  probs.reserve(mdp.n_states() * mdp.n_actions());
  for (std::size_t s = 0; s < mdp.n_states(); ++s) {
    const std::vector<double> p = selection_probabilities(x.row(s), noise, integ, s);
    probs.insert(probs.end(), p.begin(), p.end());
  }
  return StochasticPolicy(mdp.n_states(), mdp.n_actions(), std::move(probs));
}

std::pair<StateValues, StateValues> default_search_box(const TabularMdp& mdp) {
  const ValueIterationResult vi = value_iteration(mdp);
  // Pessimal values: value iteration with min in place of max.
  StateValues lo(mdp.n_states(), 0.0);
  for (std::size_t it = 0; it < 1000000; ++it) {
    const QTable q = backup(mdp, lo);
    double diff = 0.0;
    for (std::size_t s = 0; s < mdp.n_states(); ++s) {
      const auto row = q.row(s);
      const double m = *std::min_element(row.begin(), row.end());
      diff = std::max(diff, std::abs(m - lo[s]));
      lo[s] = m;
    }
    if (diff <= 1e-10) break;
  }
  StateValues hi = vi.v;
  for (std::size_t s = 0; s < mdp.n_states(); ++s) {
    lo[s] -= 5.0;
    hi[s] += 5.0;
  }
  return {lo, hi};
}

Classification classify(const TabularMdp& mdp, const StochasticPolicy& pi) {
  const ValueIterationResult vi = value_iteration(mdp);
  for (std::size_t s = 0; s < mdp.n_states(); ++s) {
    const auto q = vi.q.row(s);
    const double best = *std::max_element(q.begin(), q.end());
    const double slack = 1e-9 * std::max(1.0, std::abs(best));
    double mass = 0.0;
    for (std::size_t a = 0; a < q.size(); ++a) {
      if (q[a] >= best - slack) mass += pi(s, a);
    }
    if (mass < 1.0 - 1e-6) return Classification::non_optimal;
  }
  return Classification::optimal;
}

double verify_fixed_point_as_policy_value(const TabularMdp& mdp, const FixedPointSolution& sol) {
  const StateValues vpi = policy_evaluation(mdp, sol.induced_policy);
  return sup_norm_diff(vpi, sol.v);
}

namespace {

struct Converged {
  StateValues v;
  double residual;
  std::size_t iterations;
};

std::optional<Converged> solve_from(const TabularMdp& mdp, const OperatorSpec& op,
                                    const IntegrationSpec& integ, const SearchSpec& search,
                                    StateValues v) {
  const std::size_t n = v.size();
  auto residual_of = [&](const StateValues& at, StateValues& g) {
    g = expected_operator(mdp, at, op, integ);
    double r = 0.0;
    for (std::size_t s = 0; s < n; ++s) r = std::max(r, std::abs(g[s] - at[s]));
    return r;
  };
  StateValues g;
  std::size_t iterations = 0;

  if (search.newton) {
    Eigen::MatrixXd jac(n, n);
    Eigen::VectorXd f(n);
    StateValues probe;
    StateValues gp;
    for (std::size_t k = 0; k < 100; ++k) {
      const double r = residual_of(v, g);
      if (!std::isfinite(r)) return std::nullopt;
      if (r <= search.tol) return Converged{v, r, iterations};
      for (std::size_t s = 0; s < n; ++s) f(s) = g[s] - v[s];
      for (std::size_t j = 0; j < n; ++j) {
        const double h = 1e-6 * std::max(1.0, std::abs(v[j]));
        probe = v;
        probe[j] += h;
        gp = expected_operator(mdp, probe, op, integ);
        for (std::size_t s = 0; s < n; ++s) jac(s, j) = (gp[s] - g[s]) / h - (s == j ? 1.0 : 0.0);
      }
      const Eigen::VectorXd step = jac.partialPivLu().solve(-f);
      if (!step.allFinite()) break;
      bool accepted = false;
      double t = 1.0;
      for (int ls = 0; ls < 30; ++ls, t *= 0.5) {
        probe = v;
        for (std::size_t s = 0; s < n; ++s) probe[s] += t * step(s);
        const double rt = residual_of(probe, gp);
        if (std::isfinite(rt) && rt < (1.0 - 1e-4 * t) * r) {
          accepted = true;
          break;
        }
      }
      ++iterations;
      if (!accepted) break;
      v = probe;
    }
  }

  const double lambda = search.damping;
  while (iterations < search.max_iterations) {
    const double r = residual_of(v, g);
    if (!std::isfinite(r)) return std::nullopt;
    if (r <= search.tol) return Converged{v, r, iterations};
    for (std::size_t s = 0; s < n; ++s) v[s] = (1.0 - lambda) * v[s] + lambda * g[s];
    ++iterations;
  }
  return std::nullopt;
}

}  // namespace

SearchResult find_fixed_points(const TabularMdp& mdp, const OperatorSpec& op,
                               const IntegrationSpec& integ, const SearchSpec& search) {
  integ.validate();
  require(search.damping > 0.0 && search.damping <= 1.0, "find_fixed_points: damping must lie in (0, 1]");
  require(search.tol > 0.0, "find_fixed_points: tol must be positive");
  require(search.n_starts >= 1, "find_fixed_points: need at least one start");
  require(search.dedup_radius >= 0.0, "find_fixed_points: dedup radius must be nonnegative");
  StateValues lo = search.lo;
  StateValues hi = search.hi;
  if (lo.empty() && hi.empty()) std::tie(lo, hi) = default_search_box(mdp);
  require(lo.size() == mdp.n_states() && hi.size() == mdp.n_states(),
          "find_fixed_points: search box does not match state count");
  for (std::size_t s = 0; s < lo.size(); ++s) {
    require(std::isfinite(lo[s]) && std::isfinite(hi[s]) && lo[s] <= hi[s],
            "find_fixed_points: search box must be finite with lo <= hi");
  }

  RandomStream rng(search.seed);
  std::vector<StateValues> starts(search.n_starts, StateValues(mdp.n_states()));
  for (auto& start : starts) {
    for (std::size_t s = 0; s < start.size(); ++s) start[s] = lo[s] + (hi[s] - lo[s]) * rng.uniform01();
  }

  std::vector<std::optional<Converged>> found(starts.size());
  parallel_for(starts.size(), search.jobs, [&](std::size_t i) {
    found[i] = solve_from(mdp, op, integ, search, starts[i]);
  });

  SearchResult result;
  const IntegrationSpec fine = integ.refined();
  for (std::size_t i = 0; i < found.size(); ++i) {
    if (!found[i]) continue;
    ++result.converged_starts;
    const bool duplicate = std::any_of(result.solutions.begin(), result.solutions.end(),
                                       [&](const FixedPointSolution& sol) {
                                         return sup_norm_diff(sol.v, found[i]->v) <= search.dedup_radius;
                                       });
    if (duplicate) continue;
    FixedPointSolution sol;
    sol.v = found[i]->v;
    sol.residual = found[i]->residual;
    sol.recheck_residual = sup_norm_diff(expected_operator(mdp, sol.v, op, fine), sol.v);
    sol.induced_policy = induced_policy(mdp, sol.v, op.noise(), integ);
    sol.classification = classify(mdp, sol.induced_policy);
    sol.start_index = i;
    sol.iterations = found[i]->iterations;
    result.solutions.push_back(std::move(sol));
  }
  std::sort(result.solutions.begin(), result.solutions.end(),
            [](const FixedPointSolution& a, const FixedPointSolution& b) { return a.v < b.v; });

  std::ostringstream diag;
  if (result.converged_starts == 0) {
    diag << "no start converged within " << search.max_iterations << " iterations";
  } else {
    diag << result.solutions.size() << " distinct solution(s) from " << result.converged_starts
         << " of " << starts.size() << " converged starts";
    for (const auto& sol : result.solutions) {
      if (sol.recheck_residual > 2.0 * search.tol) {
        diag << "; solution from start " << sol.start_index << " fails the refined recheck ("
             << sol.recheck_residual << ")";
      }
    }
  }
  result.diagnostic = diag.str();
  return result;
}

double Sweep::at(std::size_t i) const {
  if (n_points <= 1) return lo;
  return lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_points - 1);
}

namespace {

void check_sweep(const Sweep& sweep) {
  require(std::isfinite(sweep.lo) && std::isfinite(sweep.hi) && sweep.lo <= sweep.hi,
          "sweep: range must be finite with lo <= hi");
  require(sweep.n_points >= 1, "sweep: need at least one point");
}

}  // namespace

std::vector<CurvePoint> response_curve(const TabularMdp& mdp, const OperatorSpec& op,
                                       std::size_t state, std::span<const double> frozen,
                                       const Sweep& sweep, const IntegrationSpec& integ) {
  check_sweep(sweep);
  require(state < mdp.n_states(), "response_curve: state out of range");
  require(frozen.size() == mdp.n_states(), "response_curve: frozen values do not match state count");
  const double floor = op.has_floor() ? op.dp_floor()[state] : 0.0;
  const bool absorbing = mdp.is_absorbing(state);
  StateValues v(frozen.begin(), frozen.end());
  std::vector<CurvePoint> curve(sweep.n_points);
  for (std::size_t i = 0; i < sweep.n_points; ++i) {
    v[state] = sweep.at(i);
    const QTable x = backup(mdp, v);
    const double out = absorbing ? 0.0 : expected_state_output(op, x.row(state), floor, integ, state);
    curve[i] = {v[state], out};
  }
  return curve;
}

std::size_t count_diagonal_crossings(std::span<const CurvePoint> curve) {
  std::size_t crossings = 0;
  int last = 0;
  for (const auto& p : curve) {
    const double d = p.v_out - p.v_in;
    const int sign = d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
    if (sign == 0) continue;
    if (last != 0 && sign != last) ++crossings;
    last = sign;
  }
  return crossings;
}

namespace {
// Central differences at |x| ~ 1e2 with h ~ 1e-4 carry rounding noise near
// 1e-8; a 1-Lipschitz output must not produce a witness from that alone.
constexpr double kSlopeMargin = 1e-6;
}  // namespace

DerivativeReport derivative_condition_check(const TabularMdp& mdp, const OperatorSpec& op,
                                            std::size_t state, std::span<const double> frozen,
                                            const Sweep& grid, double h,
                                            const IntegrationSpec& integ) {
  check_sweep(grid);
  require(h > 0.0, "derivative_condition_check: h must be positive");
  require(state < mdp.n_states(), "derivative_condition_check: state out of range");
  require(frozen.size() == mdp.n_states(),
          "derivative_condition_check: frozen values do not match state count");
  const double floor = op.has_floor() ? op.dp_floor()[state] : 0.0;
  StateValues v(frozen.begin(), frozen.end());
  DerivativeReport report;
  report.max_slope = -std::numeric_limits<double>::infinity();
  std::vector<double> probe;
  for (std::size_t i = 0; i < grid.n_points; ++i) {
    v[state] = grid.at(i);
    const QTable q = backup(mdp, v);
    const auto xs = q.row(state);
    std::vector<double> x(xs.begin(), xs.end());
    for (std::size_t a = 0; a < x.size(); ++a) {
      probe = x;
      probe[a] = x[a] + h;
      const double up = expected_state_output(op, probe, floor, integ, state);
      probe[a] = x[a] - h;
      const double down = expected_state_output(op, probe, floor, integ, state);
      const double slope = (up - down) / (2.0 * h);
      if (slope > report.max_slope) {
        report.max_slope = slope;
        report.argmax = {v[state], x, a, slope};
      }
    }
  }
  if (report.max_slope > 1.0 + kSlopeMargin) report.witness = report.argmax;
  return report;
}

namespace {

struct Moments {
  double var;
  double m4;
};

Moments central_moments(std::span<const double> xs) {
  // Shifted by the first sample so a constant sample has exactly zero spread.
  const double n = static_cast<double>(xs.size());
  const double x0 = xs.front();
  double mean = 0.0;
  for (double x : xs) mean += x - x0;
  mean /= n;
  double m2 = 0.0;
  double m4 = 0.0;
  for (double x : xs) {
    const double d = ((x - x0) - mean) * ((x - x0) - mean);
    m2 += d;
    m4 += d * d;
  }
  return {m2 / (n - 1.0), m4 / n};
}

}  // namespace

VarianceCheck variance_reduction_check(const SampleSource& source, double c, std::size_t n,
                                       std::uint64_t seed) {
  require(n >= 2, "variance_reduction_check: need at least 2 samples");
  RandomStream rng(seed);
  std::vector<double> xs(n);
  source(rng, xs);
  std::vector<double> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = std::max(xs[i], c);
  const Moments mx = central_moments(xs);
  const Moments my = central_moments(ys);
  VarianceCheck out;
  out.var_x = mx.var;
  out.var_clipped = my.var;
  out.standard_error = std::sqrt(std::max(0.0, mx.m4 - mx.var * mx.var) / static_cast<double>(n));
  out.passes = out.var_clipped <= out.var_x + 3.0 * out.standard_error;
  return out;
}

VarianceCheck variance_reduction_check(double location, const NoiseModel& noise, double c,
                                       std::size_t n, std::uint64_t seed) {
  return variance_reduction_check(
      [&](RandomStream& rng, std::span<double> out) {
        noise.sample(rng, out);
        for (double& x : out) x += location;
      },
      c, n, seed);
}

}  // namespace dbql
