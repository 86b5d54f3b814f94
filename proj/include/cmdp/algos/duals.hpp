#pragma once

#include <span>
#include <vector>

#include "cmdp/algos/config.hpp"
#include "cmdp/diffcore/adam.hpp"
#include "cmdp/diffcore/param_vector.hpp"

namespace cmdp {

// Raw Lagrange multipliers, one per cost group. The effective multiplier is
// softplus(raw).
struct LagrangeState {
  ParamVector raw;
  AdamState optimizer;

  static LagrangeState init(int n_groups, const AlgorithmConfig& cfg);
  int size() const { return static_cast<int>(raw.size()); }
  std::vector<double> effective() const;
};

// Gradient ascent on raw with signal J_C - eps, through Adam or plain SGD.
void lagrange_update(LagrangeState& state, std::span<const double> cost_return,
                     std::span<const double> threshold, const AlgorithmConfig& cfg);

}  // namespace cmdp
