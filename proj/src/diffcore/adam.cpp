#include "cmdp/diffcore/adam.hpp"

#include <cmath>

#include "cmdp/error.hpp"

namespace cmdp {

AdamState AdamState::zeros_for(const ParamVector& params) {
  AdamState s;
  s.m.assign(params.size(), 0.0);
  s.v.assign(params.size(), 0.0);
  return s;
}

void adam_step(ParamVector& params, AdamState& state, const ParamVector& grads, double lr) {
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw ShapeError("adam_step: parameter, gradient and moment sizes differ");
  }
  if (!grads.all_finite()) throw NumericError("adam_step: non-finite gradient rejected");

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  auto p = params.values();
  auto g = grads.values();
  for (std::size_t i = 0; i < p.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g[i] * g[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    p[i] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

void clip_grad_norm(ParamVector& grads, double max_norm) {
  if (max_norm <= 0.0) return;
  double sq = 0.0;
  for (double g : grads.values()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (double& g : grads.values()) g *= scale;
  }
}

}  // namespace cmdp
