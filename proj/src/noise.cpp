#include "dbql/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dbql/errors.hpp"

namespace dbql {

NoiseModel NoiseModel::uniform(double eps) {
  require(std::isfinite(eps) && eps >= 0.0, "noise: uniform half-width must be >= 0");
  return NoiseModel(Kind::uniform, eps);
}

NoiseModel NoiseModel::gaussian(double sigma) {
  require(std::isfinite(sigma) && sigma >= 0.0, "noise: gaussian sigma must be >= 0");
  return NoiseModel(Kind::gaussian, sigma);
}

double NoiseModel::stddev() const {
  switch (kind_) {
    case Kind::zero:
      return 0.0;
    case Kind::uniform:
      return scale_ / std::sqrt(3.0);
    case Kind::gaussian:
      return scale_;
  }
  return 0.0;
}

double NoiseModel::pdf(double x) const {
  require(!is_zero(), "noise: degenerate model has no density");
  if (kind_ == Kind::uniform) return (x >= -scale_ && x <= scale_) ? 0.5 / scale_ : 0.0;
  const double z = x / scale_;
  return std::exp(-0.5 * z * z) / (scale_ * std::sqrt(2.0 * std::numbers::pi));
}

double NoiseModel::cdf(double x) const {
  if (is_zero()) return x >= 0.0 ? 1.0 : 0.0;
  if (kind_ == Kind::uniform) return std::clamp((x + scale_) / (2.0 * scale_), 0.0, 1.0);
  return 0.5 * std::erfc(-x / (scale_ * std::numbers::sqrt2));
}

double NoiseModel::upper_partial(double c) const {
  if (is_zero()) return std::max(-c, 0.0);
  if (kind_ == Kind::uniform) {
    if (c >= scale_) return 0.0;
    if (c <= -scale_) return -c;
    const double d = scale_ - c;
    return d * d / (4.0 * scale_);
  }
  const double z = c / scale_;
  const double phi = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  const double tail = 0.5 * std::erfc(z / std::numbers::sqrt2);
  return scale_ * phi - c * tail;
}

double NoiseModel::expected_min(double c) const { return -upper_partial(c); }

double NoiseModel::expected_max(double c) const { return c + upper_partial(c); }

double NoiseModel::expected_clamp(double lo, double hi) const {
  require(lo <= hi, "noise: expected_clamp needs lo <= hi");
  return lo + upper_partial(lo) - upper_partial(hi);
}

double NoiseModel::support_lo() const {
  if (is_zero()) return 0.0;
  return kind_ == Kind::uniform ? -scale_ : -10.0 * scale_;
}

double NoiseModel::support_hi() const {
  if (is_zero()) return 0.0;
  return kind_ == Kind::uniform ? scale_ : 10.0 * scale_;
}

void NoiseModel::sample(RandomStream& rng, std::span<double> out) const {
  switch (kind_) {
    case Kind::zero:
      std::fill(out.begin(), out.end(), 0.0);
      return;
    case Kind::uniform:
      rng.fill_uniform(out, -scale_, scale_);
      return;
    case Kind::gaussian:
      rng.fill_normal(out, scale_);
      return;
  }
}

const char* to_string(NoiseModel::Kind kind) {
  switch (kind) {
    case NoiseModel::Kind::zero:
      return "zero";
    case NoiseModel::Kind::uniform:
      return "uniform";
    case NoiseModel::Kind::gaussian:
      return "gaussian";
  }
  return "?";
}

std::vector<double> sample_noise_table(const NoiseModel& model, std::size_t n_states,
                                       std::size_t n_actions, RandomStream& rng) {
  std::vector<double> out(n_states * n_actions);
  model.sample(rng, out);
  return out;
}

}  // namespace dbql
