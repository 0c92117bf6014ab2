#pragma once

// Distribution of the additive approximation error e(s, a).

#include <span>

#include "dbql/mdp.hpp"
#include "dbql/rng.hpp"

namespace dbql {

class NoiseModel {
 public:
  enum class Kind { zero, uniform, gaussian };

  static NoiseModel zero() { return NoiseModel(Kind::zero, 0.0); }
  // Uniform(-eps, eps).
  static NoiseModel uniform(double eps);
  // N(0, sigma^2).
  static NoiseModel gaussian(double sigma);

  Kind kind() const noexcept { return kind_; }
  // eps for uniform, sigma for gaussian, 0 for zero.
  double scale() const noexcept { return scale_; }
  bool is_zero() const noexcept { return kind_ == Kind::zero || scale_ == 0.0; }

  double stddev() const;
  double pdf(double x) const;
  double cdf(double x) const;
  // E[(X - c)^+]
  double upper_partial(double c) const;
  // E[min(c, X)], E[max(c, X)], E[clamp(X, lo, hi)] for lo <= hi.
  double expected_min(double c) const;
  double expected_max(double c) const;
  double expected_clamp(double lo, double hi) const;

  // Integration range for quadrature: the support for uniform, +-10 sigma for
  // gaussian (tail mass below 2e-23).
  double support_lo() const;
  double support_hi() const;

  void sample(RandomStream& rng, std::span<double> out) const;

  friend bool operator==(const NoiseModel&, const NoiseModel&) = default;

 private:
  NoiseModel(Kind kind, double scale) : kind_(kind), scale_(scale) {}
  Kind kind_;
  double scale_;
};

const char* to_string(NoiseModel::Kind kind);

// i.i.d. draws for every (state, action), row-major.
std::vector<double> sample_noise_table(const NoiseModel& model, std::size_t n_states,
                                       std::size_t n_actions, RandomStream& rng);

}  // namespace dbql
