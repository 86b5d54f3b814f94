#pragma once

#include <functional>
#include <vector>

#include "cmdp/diffcore/param_vector.hpp"
#include "cmdp/envs/tabular.hpp"

namespace cmdp::oracle {

struct PolicyReturns {
  double reward = 0.0;
  std::vector<double> costs;  // one per constraint
};

// Solves V = R_pi + gamma P_pi V with a dense LU factorization for the reward
// and every cost channel, then weights by the initial distribution.
PolicyReturns exact_policy_eval(const TabularCmdp& cmdp, const TabularPolicy& policy, double gamma);

inline constexpr double kMaxEnumeratedPaths = 5e7;

// Discounted returns over the first `horizon` steps by enumerating every
// trajectory. Throws std::length_error when (states * actions)^horizon
// exceeds kMaxEnumeratedPaths.
PolicyReturns brute_force_return(const TabularCmdp& cmdp, const TabularPolicy& policy, double gamma,
                                 int horizon);

using Objective = std::function<double(const ParamVector&)>;

// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h. Throws NumericError
// when the objective returns a non-finite value.
ParamVector finite_diff_grad(const Objective& f, const ParamVector& params, double h = 1e-5);

}  // namespace cmdp::oracle
