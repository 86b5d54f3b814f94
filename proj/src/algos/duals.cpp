#include "cmdp/algos/duals.hpp"

#include <cmath>
#include <stdexcept>

#include "cmdp/diffcore/activations.hpp"
#include "cmdp/error.hpp"

namespace cmdp {

LagrangeState LagrangeState::init(int n_groups, const AlgorithmConfig& cfg) {
  if (n_groups <= 0) throw std::invalid_argument("LagrangeState needs at least one group");
  LagrangeState s;
  s.raw.add_segment("lambda_raw", 1, n_groups);
  for (double& v : s.raw.values()) v = cfg.lambda_init;
  s.optimizer = AdamState::zeros_for(s.raw);
  return s;
}

std::vector<double> LagrangeState::effective() const {
  std::vector<double> out;
  for (double v : raw.values()) out.push_back(softplus(v));
  return out;
}

void lagrange_update(LagrangeState& state, std::span<const double> cost_return,
                     std::span<const double> threshold, const AlgorithmConfig& cfg) {
  const auto n = static_cast<std::size_t>(state.size());
  if (cost_return.size() != n || threshold.size() != n) {
    throw ShapeError("lagrange_update: expected one cost return and threshold per multiplier");
  }
  ParamVector descent = state.raw.zeros_like();
  for (std::size_t g = 0; g < n; ++g) {
    if (!std::isfinite(cost_return[g])) throw NumericError("lagrange_update: non-finite cost return");
    descent[g] = -(cost_return[g] - threshold[g]);
  }
  if (cfg.lambda_optimizer == DualOptimizer::kSgd) {
    for (std::size_t g = 0; g < n; ++g) state.raw[g] -= cfg.lambda_lr * descent[g];
  } else {
    adam_step(state.raw, state.optimizer, descent, cfg.lambda_lr);
  }
}

}  // namespace cmdp
