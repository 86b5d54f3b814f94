#pragma once

#include <cstdint>
#include <vector>

#include "cmdp/diffcore/param_vector.hpp"

namespace cmdp {

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState zeros_for(const ParamVector& params);
};

// One bias-corrected Adam descent step: params -= lr * m_hat / (sqrt(v_hat) + eps).
// A non-finite gradient leaves params and state untouched and throws NumericError.
void adam_step(ParamVector& params, AdamState& state, const ParamVector& grads, double lr);

// Rescales grads in place so their global L2 norm is at most max_norm.
void clip_grad_norm(ParamVector& grads, double max_norm);

}  // namespace cmdp
