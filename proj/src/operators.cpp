#include "dbql/operators.hpp"

#include <algorithm>
#include <cmath>

#include "dbql/errors.hpp"
#include "dbql/simd/kernels.hpp"

namespace dbql {

const char* to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::noisy_max:
      return "noisy_max";
    case OperatorKind::double_q:
      return "double";
    case OperatorKind::clipped_double:
      return "clipped_double";
    case OperatorKind::doubly_bounded:
      return "doubly_bounded";
  }
  return "?";
}

OperatorSpec OperatorSpec::noisy_max(NoiseModel noise) {
  return OperatorSpec(OperatorKind::noisy_max, noise);
}

OperatorSpec OperatorSpec::double_q(NoiseModel noise) {
  return OperatorSpec(OperatorKind::double_q, noise);
}

OperatorSpec OperatorSpec::clipped_double(NoiseModel noise) {
  return OperatorSpec(OperatorKind::clipped_double, noise);
}

OperatorSpec OperatorSpec::doubly_bounded(const OperatorSpec& inner, StateValues dp_floor) {
  require(inner.kind() != OperatorKind::doubly_bounded,
          "doubly_bounded: inner operator must be a bootstrap estimator");
  for (double f : dp_floor) {
    require(!std::isnan(f) && f != INFINITY, "doubly_bounded: floor entries must be < +inf");
  }
  OperatorSpec spec(OperatorKind::doubly_bounded, inner.noise());
  spec.inner_ = std::make_shared<const OperatorSpec>(inner);
  spec.floor_ = std::move(dp_floor);
  return spec;
}

std::size_t OperatorSpec::noise_tables() const noexcept {
  return bootstrap().kind() == OperatorKind::noisy_max ? 1 : 2;
}

StateDraw noisy_max_state(std::span<const double> x, std::span<const double> e1) {
  std::size_t best = 0;
  double best_v = x[0] + e1[0];
  for (std::size_t a = 1; a < x.size(); ++a) {
    const double q = x[a] + e1[a];
    if (q > best_v) {
      best_v = q;
      best = a;
    }
  }
  return {best_v, best};
}

StateDraw double_state(std::span<const double> x, std::span<const double> e1,
                       std::span<const double> e2) {
  const std::size_t a = noisy_max_state(x, e1).selected;
  return {x[a] + e2[a], a};
}

StateDraw clipped_double_state(std::span<const double> x, std::span<const double> e1,
                               std::span<const double> e2) {
  const std::size_t a = noisy_max_state(x, e1).selected;
  return {std::min(x[a] + e1[a], x[a] + e2[a]), a};
}

StateDraw operator_state(const OperatorSpec& op, std::span<const double> x,
                         std::span<const double> e1, std::span<const double> e2, double floor) {
  StateDraw d{};
  switch (op.bootstrap().kind()) {
    case OperatorKind::noisy_max:
      d = noisy_max_state(x, e1);
      break;
    case OperatorKind::double_q:
      d = double_state(x, e1, e2);
      break;
    case OperatorKind::clipped_double:
      d = clipped_double_state(x, e1, e2);
      break;
    case OperatorKind::doubly_bounded:
      contract_fail("operator_state: nested doubly bounded operator");
  }
  if (op.has_floor() && d.value < floor) d.value = floor;
  return d;
}

namespace {

void check_shapes(const TabularMdp& mdp, std::span<const double> v, std::span<const double> e1,
                  std::span<const double> e2, bool need_e2) {
  const std::size_t sa = mdp.n_states() * mdp.n_actions();
  require(v.size() == mdp.n_states(), "operator: value vector does not match state count");
  require(e1.size() == sa, "operator: first noise table does not match |S||A|");
  require(!need_e2 || e2.size() == sa, "operator: second noise table does not match |S||A|");
}

QTable perturbed(const QTable& x, std::span<const double> e) {
  QTable q = x;
  auto f = q.flat();
  for (std::size_t i = 0; i < f.size(); ++i) f[i] += e[i];
  return q;
}

}  // namespace

OperatorDraw apply_with_draws(const TabularMdp& mdp, std::span<const double> v,
                              const OperatorSpec& op, std::span<const double> e1,
                              std::span<const double> e2) {
  const bool two = op.noise_tables() == 2;
  check_shapes(mdp, v, e1, e2, two);
  if (op.has_floor()) {
    require(op.dp_floor().size() == mdp.n_states(), "operator: floor does not match state count");
  }
  const QTable x = backup(mdp, v);
  OperatorDraw out;
  out.v.resize(mdp.n_states());
  out.selected.resize(mdp.n_states());
  const std::size_t na = mdp.n_actions();
  for (std::size_t s = 0; s < mdp.n_states(); ++s) {
    if (mdp.is_absorbing(s)) {
      out.v[s] = 0.0;
      out.selected[s] = 0;
      continue;
    }
    const auto r1 = e1.subspan(s * na, na);
    const auto r2 = two ? e2.subspan(s * na, na) : r1;
    const double floor = op.has_floor() ? op.dp_floor()[s] : 0.0;
    const StateDraw d = operator_state(op, x.row(s), r1, r2, floor);
    out.v[s] = d.value;
    out.selected[s] = d.selected;
  }
  out.q1 = perturbed(x, e1);
  out.q2 = two ? perturbed(x, e2) : out.q1;
  return out;
}

OperatorDraw apply_noisy_max(const TabularMdp& mdp, std::span<const double> v,
                             std::span<const double> e) {
  return apply_with_draws(mdp, v, OperatorSpec::noisy_max(NoiseModel::zero()), e, {});
}

OperatorDraw apply_double(const TabularMdp& mdp, std::span<const double> v,
                          std::span<const double> e1, std::span<const double> e2) {
  return apply_with_draws(mdp, v, OperatorSpec::double_q(NoiseModel::zero()), e1, e2);
}

OperatorDraw apply_clipped_double(const TabularMdp& mdp, std::span<const double> v,
                                  std::span<const double> e1, std::span<const double> e2) {
  return apply_with_draws(mdp, v, OperatorSpec::clipped_double(NoiseModel::zero()), e1, e2);
}

void draw_noise(const OperatorSpec& op, RandomStream& rng, std::span<double> e1,
                std::span<double> e2) {
  const std::size_t n = e1.size();
  if (op.noise_tables() == 1) {
    op.noise().sample(rng, e1);
    return;
  }
  require(e2.size() == n, "draw_noise: tables differ in size");
  std::vector<double> both(2 * n);
  op.noise().sample(rng, both);
  std::copy_n(both.begin(), n, e1.begin());
  std::copy_n(both.begin() + static_cast<std::ptrdiff_t>(n), n, e2.begin());
}

OperatorDraw apply_doubly_bounded(const TabularMdp& mdp, std::span<const double> v,
                                  const OperatorSpec& op, RandomStream& rng) {
  require(op.kind() == OperatorKind::doubly_bounded,
          "apply_doubly_bounded: operator is not doubly bounded");
  const std::size_t sa = mdp.n_states() * mdp.n_actions();
  std::vector<double> e1(sa);
  std::vector<double> e2(op.noise_tables() == 2 ? sa : 0);
  draw_noise(op, rng, e1, e2);
  return apply_with_draws(mdp, v, op, e1, e2);
}

StateValues soft_update(std::span<const double> v_old, std::span<const double> v_new,
                        double alpha) {
  require(alpha > 0.0 && alpha <= 1.0, "soft_update: alpha must lie in (0, 1]");
  require(v_old.size() == v_new.size(), "soft_update: size mismatch");
  StateValues out(v_old.begin(), v_old.end());
  simd::kernels().soft_update(out.data(), v_new.data(), out.size(), alpha);
  return out;
}

OperatorEngine::OperatorEngine(const TabularMdp& mdp, const OperatorSpec& op)
    : mdp_(&mdp),
      op_(op),
      targets_(mdp.n_states(), mdp.n_actions()),
      noise_(op.noise_tables() * mdp.n_states() * mdp.n_actions()),
      out_(mdp.n_states()),
      absorbing_(mdp.n_states()) {
  for (std::size_t s = 0; s < mdp.n_states(); ++s) absorbing_[s] = mdp.is_absorbing(s);
  if (op.has_floor()) {
    require(op.dp_floor().size() == mdp.n_states(), "operator: floor does not match state count");
  }
}

const StateValues& OperatorEngine::draw(std::span<const double> v, RandomStream& rng) {
  backup_into(*mdp_, v, targets_);
  op_.noise().sample(rng, noise_);
  const std::size_t na = mdp_->n_actions();
  const std::size_t sa = mdp_->n_states() * na;
  const std::span<const double> e1(noise_.data(), sa);
  const std::span<const double> e2 = op_.noise_tables() == 2 ? std::span<const double>(noise_.data() + sa, sa) : e1;
  for (std::size_t s = 0; s < mdp_->n_states(); ++s) {
    if (absorbing_[s]) {
      out_[s] = 0.0;
      continue;
    }
    const double floor = op_.has_floor() ? op_.dp_floor()[s] : 0.0;
    out_[s] = operator_state(op_, targets_.row(s), e1.subspan(s * na, na), e2.subspan(s * na, na),
                             floor)
                  .value;
  }
  return out_;
}

}  // namespace dbql
