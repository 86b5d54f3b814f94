#include "cmdp/diffcore/gaussian.hpp"

#include <cmath>
#include <numbers>

#include "cmdp/error.hpp"

namespace cmdp {
namespace {
const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);
}

Var gaussian_logprob(const GaussianPolicyOutput& out, const Matrix& actions) {
  const Matrix& mu = out.mean.value();
  if (actions.rows() != mu.rows() || actions.cols() != mu.cols()) {
    throw ShapeError("action batch shape does not match policy mean");
  }
  if (out.log_std.rows() != 1 || out.log_std.cols() != mu.cols()) {
    throw ShapeError("log_std must be 1 x action_dim");
  }
  Tape& tape = *out.mean.tape();
  const double d = static_cast<double>(mu.cols());
  Var z = (tape.constant(actions) - out.mean) * exp(-out.log_std);
  return -0.5 * row_sum(square(z)) - sum(out.log_std) - d * kHalfLog2Pi;
}

Var gaussian_entropy(Var log_std) {
  const double d = static_cast<double>(log_std.value().size());
  return sum(log_std) + d * (kHalfLog2Pi + 0.5);
}

double gaussian_logprob(std::span<const double> mean, std::span<const double> log_std,
                        std::span<const double> action) {
  if (mean.size() != action.size() || log_std.size() != action.size()) {
    throw ShapeError("gaussian_logprob dimension mismatch");
  }
  double lp = 0.0;
  for (std::size_t i = 0; i < action.size(); ++i) {
    const double z = (action[i] - mean[i]) * std::exp(-log_std[i]);
    lp += -0.5 * z * z - log_std[i] - kHalfLog2Pi;
  }
  return lp;
}

double gaussian_entropy(std::span<const double> log_std) {
  double h = 0.0;
  for (double ls : log_std) h += kHalfLog2Pi + 0.5 + ls;
  return h;
}

}  // namespace cmdp
