#pragma once

// Stochastic Bellman operators as single-draw procedures.
//
// Every operator first forms the exact targets x(s, a) = (TQ)(s, a) from the
// current state values, then perturbs them with independent noise tables and
// reduces each state to one value:
//
//   noisy_max       V'(s) = max_a [x + e1]
//   double          a* = argmax_a [x + e1];  V'(s) = x(s, a*) + e2(s, a*)
//   clipped_double  a* = argmax_a [x + e1];  V'(s) = min_i x(s, a*) + e_i(s, a*)
//   doubly_bounded  V'(s) = max(inner(s), dp_floor(s))
//
// Argmax ties go to the lowest action index. Absorbing zero-reward states are
// terminal: every operator returns exactly 0 there and ignores their noise.

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "dbql/mdp.hpp"
#include "dbql/noise.hpp"
#include "dbql/rng.hpp"

namespace dbql {

enum class OperatorKind { noisy_max, double_q, clipped_double, doubly_bounded };

const char* to_string(OperatorKind kind);

class OperatorSpec {
 public:
  static OperatorSpec noisy_max(NoiseModel noise);
  static OperatorSpec double_q(NoiseModel noise);
  static OperatorSpec clipped_double(NoiseModel noise);
  // inner must not itself be doubly bounded; floor entries may be -inf.
  static OperatorSpec doubly_bounded(const OperatorSpec& inner, StateValues dp_floor);

  OperatorKind kind() const noexcept { return kind_; }
  // Noise of the bootstrap estimator (the inner one for doubly_bounded).
  const NoiseModel& noise() const noexcept { return noise_; }
  // The bootstrap estimator: *this unless doubly bounded.
  const OperatorSpec& bootstrap() const noexcept { return inner_ ? *inner_ : *this; }
  bool has_floor() const noexcept { return kind_ == OperatorKind::doubly_bounded; }
  std::span<const double> dp_floor() const noexcept { return floor_; }
  // Number of noise tables a single draw consumes (1 or 2).
  std::size_t noise_tables() const noexcept;

 private:
  OperatorSpec(OperatorKind kind, NoiseModel noise) : kind_(kind), noise_(noise) {}

  OperatorKind kind_;
  NoiseModel noise_;
  std::shared_ptr<const OperatorSpec> inner_;
  StateValues floor_;
};

struct StateDraw {
  double value;
  std::size_t selected;
};

// Per-state reductions on one row of targets and noise.
StateDraw noisy_max_state(std::span<const double> x, std::span<const double> e1);
StateDraw double_state(std::span<const double> x, std::span<const double> e1,
                       std::span<const double> e2);
StateDraw clipped_double_state(std::span<const double> x, std::span<const double> e1,
                               std::span<const double> e2);
// Dispatch on kind; `floor` is applied only by doubly_bounded.
StateDraw operator_state(const OperatorSpec& op, std::span<const double> x,
                         std::span<const double> e1, std::span<const double> e2, double floor);

struct OperatorDraw {
  StateValues v;
  QTable q1;  // x + e1
  QTable q2;  // x + e2 (equal to q1 for noisy_max)
  std::vector<std::size_t> selected;
};

OperatorDraw apply_noisy_max(const TabularMdp& mdp, std::span<const double> v,
                             std::span<const double> e);
OperatorDraw apply_double(const TabularMdp& mdp, std::span<const double> v,
                          std::span<const double> e1, std::span<const double> e2);
OperatorDraw apply_clipped_double(const TabularMdp& mdp, std::span<const double> v,
                                  std::span<const double> e1, std::span<const double> e2);
// Any kind with explicit draws; e2 is ignored by noisy_max.
OperatorDraw apply_with_draws(const TabularMdp& mdp, std::span<const double> v,
                              const OperatorSpec& op, std::span<const double> e1,
                              std::span<const double> e2);
// Draws its noise from rng (see draw_noise).
OperatorDraw apply_doubly_bounded(const TabularMdp& mdp, std::span<const double> v,
                                  const OperatorSpec& op, RandomStream& rng);

// Fills e1 (and e2 when the operator needs a second table) with one call on
// the stream: a single block of 2 * |S||A| draws, e1 first.
void draw_noise(const OperatorSpec& op, RandomStream& rng, std::span<double> e1,
                std::span<double> e2);

// (1 - alpha) * old + alpha * fresh, 0 < alpha <= 1.
StateValues soft_update(std::span<const double> v_old, std::span<const double> v_new,
                        double alpha);

// Allocation-free repeated application for long simulations.
class OperatorEngine {
 public:
  OperatorEngine(const TabularMdp& mdp, const OperatorSpec& op);

  // One draw of the operator at v, noise from rng. The returned reference is
  // valid until the next call.
  const StateValues& draw(std::span<const double> v, RandomStream& rng);
  const QTable& targets() const noexcept { return targets_; }

 private:
  const TabularMdp* mdp_;
  OperatorSpec op_;
  QTable targets_;
  std::vector<double> noise_;
  StateValues out_;
  std::vector<char> absorbing_;
};

}  // namespace dbql
