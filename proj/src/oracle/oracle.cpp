#include "cmdp/oracle/oracle.hpp"

#include <Eigen/LU>

#include <cmath>
#include <stdexcept>

#include "cmdp/error.hpp"

namespace cmdp::oracle {
namespace {

void check_inputs(const TabularCmdp& cmdp, const TabularPolicy& policy, double gamma) {
  cmdp.validate();
  policy.validate();
  if (policy.n_states != cmdp.n_states || policy.n_actions != cmdp.n_actions) {
    throw std::invalid_argument("policy does not match the CMDP");
  }
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");
}

// Expected one-step signal under the policy, per state.
Eigen::VectorXd expected_signal(const TabularCmdp& m, const TabularPolicy& pi, const std::vector<double>& table) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(m.n_states);
  for (int s = 0; s < m.n_states; ++s) {
    for (int a = 0; a < m.n_actions; ++a) {
      for (int s2 = 0; s2 < m.n_states; ++s2) out(s) += pi.prob(s, a) * m.p(s, a, s2) * table[m.index(s, a, s2)];
    }
  }
  return out;
}

struct Enumerator {
  const TabularCmdp& m;
  const TabularPolicy& pi;
  double gamma;
  int horizon;
  PolicyReturns acc;

  void visit(int s, int t, double prob, double discount) {
    if (t == horizon) return;
    for (int a = 0; a < m.n_actions; ++a) {
      const double pa = pi.prob(s, a);
      if (pa == 0.0) continue;
      for (int s2 = 0; s2 < m.n_states; ++s2) {
        const double p = prob * pa * m.p(s, a, s2);
        if (p == 0.0) continue;
        const std::size_t i = m.index(s, a, s2);
        acc.reward += p * discount * m.reward[i];
        for (std::size_t c = 0; c < m.cost.size(); ++c) acc.costs[c] += p * discount * m.cost[c][i];
        visit(s2, t + 1, p, discount * gamma);
      }
    }
  }
};

}  // namespace

PolicyReturns exact_policy_eval(const TabularCmdp& cmdp, const TabularPolicy& policy, double gamma) {
  check_inputs(cmdp, policy, gamma);
  const int n = cmdp.n_states;
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n, n);
  for (int s = 0; s < n; ++s) {
    for (int act = 0; act < cmdp.n_actions; ++act) {
      for (int s2 = 0; s2 < n; ++s2) a(s, s2) -= gamma * policy.prob(s, act) * cmdp.p(s, act, s2);
    }
  }
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  const Eigen::VectorXd mu = Eigen::Map<const Eigen::VectorXd>(cmdp.initial_dist.data(), n);

  PolicyReturns out;
  out.reward = mu.dot(lu.solve(expected_signal(cmdp, policy, cmdp.reward)));
  for (const auto& table : cmdp.cost) out.costs.push_back(mu.dot(lu.solve(expected_signal(cmdp, policy, table))));
  if (!std::isfinite(out.reward)) throw NumericError("exact_policy_eval: singular system");
  return out;
}

PolicyReturns brute_force_return(const TabularCmdp& cmdp, const TabularPolicy& policy, double gamma,
                                 int horizon) {
  check_inputs(cmdp, policy, gamma);
  if (horizon < 0) throw std::invalid_argument("horizon must be non-negative");
  const double paths = std::pow(static_cast<double>(cmdp.n_states) * cmdp.n_actions, horizon);
  if (paths > kMaxEnumeratedPaths) throw std::length_error("brute_force_return: too many trajectories");

  Enumerator e{cmdp, policy, gamma, horizon, {}};
  e.acc.costs.assign(cmdp.cost.size(), 0.0);
  for (int s = 0; s < cmdp.n_states; ++s) {
    const double p0 = cmdp.initial_dist[static_cast<std::size_t>(s)];
    if (p0 > 0.0) e.visit(s, 0, p0, 1.0);
  }
  return e.acc;
}

ParamVector finite_diff_grad(const Objective& f, const ParamVector& params, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite_diff_grad: h must be positive");
  ParamVector x = params;
  ParamVector g = params.zeros_like();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double x0 = x[i];
    x[i] = x0 + h;
    const double fp = f(x);
    x[i] = x0 - h;
    const double fm = f(x);
    x[i] = x0;
    if (!std::isfinite(fp) || !std::isfinite(fm)) throw NumericError("finite_diff_grad: non-finite objective");
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

}  // namespace cmdp::oracle
