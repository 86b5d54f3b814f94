#pragma once

#include <span>

#include "cmdp/diffcore/tape.hpp"

namespace cmdp {

// Diagonal Gaussian head: mean is (batch x action_dim), log_std is
// (1 x action_dim) and shared by every row.
struct GaussianPolicyOutput {
  Var mean;
  Var log_std;
};

// Per-row log density, (batch x 1).
Var gaussian_logprob(const GaussianPolicyOutput& out, const Matrix& actions);

// Entropy of one row's distribution, 1x1.
Var gaussian_entropy(Var log_std);

double gaussian_logprob(std::span<const double> mean, std::span<const double> log_std,
                        std::span<const double> action);
double gaussian_entropy(std::span<const double> log_std);

}  // namespace cmdp
