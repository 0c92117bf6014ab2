#pragma once

// Expected operators E[T~V], their approximate fixed points, induced
// policies, response curves and the two diagnostic checks (derivative
// condition, variance under a floor).
//
// Quadrature reduces every state to one-dimensional integrals: conditioning
// on which action wins the noisy argmax, the winner's e1 is the only
// variable, the losers contribute CDF factors, and the e2 expectation at the
// winner has a closed form. Panels are split at every kink so the
// Gauss-Legendre rule sees smooth pieces.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dbql/mdp.hpp"
#include "dbql/noise.hpp"
#include "dbql/operators.hpp"

namespace dbql {

enum class IntegrationMethod { quadrature, monte_carlo };

const char* to_string(IntegrationMethod m);

struct IntegrationSpec {
  IntegrationMethod method = IntegrationMethod::quadrature;
  // Gauss-Legendre nodes per panel, or Monte Carlo samples per state.
  std::size_t nodes_or_samples = 64;
  std::uint64_t seed = 0;  // monte_carlo only

  static IntegrationSpec quadrature(std::size_t nodes = 64);
  static IntegrationSpec monte_carlo(std::size_t samples, std::uint64_t seed);
  // Same method at twice the resolution.
  IntegrationSpec refined() const;
  void validate() const;
};

// E[f_s(x + noise)] for one state's targets x. `floor` is used only when the
// operator is doubly bounded. `stream` selects the Monte Carlo substream.
double expected_state_output(const OperatorSpec& op, std::span<const double> x, double floor,
                             const IntegrationSpec& integ, std::uint64_t stream = 0);

// P[a = argmax(x + e)] for one state.
std::vector<double> selection_probabilities(std::span<const double> x, const NoiseModel& noise,
                                            const IntegrationSpec& integ,
                                            std::uint64_t stream = 0);

StateValues expected_operator(const TabularMdp& mdp, std::span<const double> v,
                              const OperatorSpec& op, const IntegrationSpec& integ);

StochasticPolicy induced_policy(const TabularMdp& mdp, std::span<const double> v,
                                const NoiseModel& noise, const IntegrationSpec& integ);

enum class Classification { optimal, non_optimal };

const char* to_string(Classification c);

struct FixedPointSolution {
  StateValues v;
  double residual = 0.0;          // sup |E[T~V] - V|
  double recheck_residual = 0.0;  // same at doubled resolution
  StochasticPolicy induced_policy;
  Classification classification = Classification::non_optimal;
  std::size_t start_index = 0;
  std::size_t iterations = 0;
};

struct SearchSpec {
  // Per-state box for the starts; empty means the default box (see
  // default_search_box).
  StateValues lo;
  StateValues hi;
  std::size_t n_starts = 200;
  double damping = 0.2;
  double tol = 1e-9;
  double dedup_radius = 0.05;
  std::size_t max_iterations = 100000;
  std::uint64_t seed = 0;
  // Newton steps on E[T~V] - V before falling back to damped iteration.
  // Damped iteration alone cannot reach roots where the operator's slope
  // exceeds 1.
  bool newton = true;
  std::size_t jobs = 1;
};

struct SearchResult {
  std::vector<FixedPointSolution> solutions;  // ascending lexicographic in v
  std::size_t converged_starts = 0;
  std::string diagnostic;
};

// [min_pi V^pi(s) - 5, V*(s) + 5] over deterministic policies.
std::pair<StateValues, StateValues> default_search_box(const TabularMdp& mdp);

SearchResult find_fixed_points(const TabularMdp& mdp, const OperatorSpec& op,
                               const IntegrationSpec& integ, const SearchSpec& search);

// Optimal iff at every state the induced policy puts at least 1 - 1e-6 of
// its mass on actions that are optimal under the exact Q*.
Classification classify(const TabularMdp& mdp, const StochasticPolicy& pi);

// sup |V^pi~ - v|.
double verify_fixed_point_as_policy_value(const TabularMdp& mdp, const FixedPointSolution& sol);

struct Sweep {
  double lo = 0.0;
  double hi = 0.0;
  std::size_t n_points = 2;
  double at(std::size_t i) const;
};

struct CurvePoint {
  double v_in;
  double v_out;
};

std::vector<CurvePoint> response_curve(const TabularMdp& mdp, const OperatorSpec& op,
                                       std::size_t state, std::span<const double> frozen,
                                       const Sweep& sweep, const IntegrationSpec& integ);

// Sign changes of v_out - v_in along the curve (a touch counts once).
std::size_t count_diagonal_crossings(std::span<const CurvePoint> curve);

struct DerivativeWitness {
  double v_in;               // V(state) at the grid point
  std::vector<double> x;     // the state's targets there
  std::size_t action;        // coordinate with the largest slope
  double slope;
};

struct DerivativeReport {
  double max_slope = 0.0;
  std::optional<DerivativeWitness> witness;  // present iff max_slope > 1 + 1e-6
  DerivativeWitness argmax;                  // where max_slope was attained
};

// Central differences of the expected per-state output with respect to each
// target x(state, a), at every grid value of V(state) (other entries frozen).
DerivativeReport derivative_condition_check(const TabularMdp& mdp, const OperatorSpec& op,
                                            std::size_t state, std::span<const double> frozen,
                                            const Sweep& grid, double h,
                                            const IntegrationSpec& integ);

struct VarianceCheck {
  double var_x = 0.0;
  double var_clipped = 0.0;
  double standard_error = 0.0;  // of the var_x estimate
  bool passes = false;
};

using SampleSource = std::function<void(RandomStream&, std::span<double>)>;

// Paired samples X and max(X, c); passes iff var_clipped <= var_x + 3 SE.
VarianceCheck variance_reduction_check(const SampleSource& source, double c, std::size_t n,
                                       std::uint64_t seed);
// X = location + noise.
VarianceCheck variance_reduction_check(double location, const NoiseModel& noise, double c,
                                       std::size_t n, std::uint64_t seed);

}  // namespace dbql
