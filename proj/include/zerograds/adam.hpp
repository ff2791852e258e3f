#pragma once

#include <cmath>
#include <cstdint>

#include "zerograds/core.hpp"

namespace zg {

/// Bias-corrected Adam. `scale`, when non-empty, multiplies the step per
/// coordinate (used to express the learning rate in units of domain extent).
struct AdamState {
  Vector m;
  Vector v;
  std::int64_t t = 0;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  Vector scale;

  AdamState() = default;
  AdamState(Eigen::Index n, double learning_rate)
      : m(Vector::Zero(n)), v(Vector::Zero(n)), lr(learning_rate) {}
};

/// In place: x <- x - lr * scale * m_hat / (sqrt(v_hat) + eps).
inline void adam_update(AdamState& state, Vector& x, const Vector& grad) {
  require_dim(grad.size(), x.size(), "adam_step");
  require_dim(state.m.size(), x.size(), "adam_step");
  state.t += 1;
  state.m = state.beta1 * state.m + (1.0 - state.beta1) * grad;
  state.v = state.beta2 * state.v + (1.0 - state.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  Vector step = state.lr * (state.m / c1).array() / ((state.v / c2).cwiseSqrt().array() + state.eps);
  if (state.scale.size() != 0) {
    require_dim(state.scale.size(), x.size(), "adam_step");
    step.array() *= state.scale.array();
  }
  x -= step;
}

inline Vector adam_step(AdamState& state, const Vector& x, const Vector& grad) {
  Vector out = x;
  adam_update(state, out, grad);
  return out;
}

}  // namespace zg
