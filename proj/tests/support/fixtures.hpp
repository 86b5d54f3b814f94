#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "cmdp/algos/losses.hpp"
#include "cmdp/algos/model.hpp"
#include "cmdp/diffcore/gaussian.hpp"
#include "cmdp/oracle/oracle.hpp"
#include "cmdp/rng.hpp"

namespace fixtures {

using namespace cmdp;

inline ModelConfig tiny_model() {
  ModelConfig m;
  m.hidden = {5};
  m.activation = Activation::kTanh;
  return m;
}

// A policy at a random parameter point with observations, actions and old
// log-probabilities drawn so that ratios spread on both sides of the clip.
struct Problem {
  ActorCritic model;
  Minibatch mb;
  ConstraintContext ctx;
  DualValues duals;
};

inline Eigen::VectorXd normal_vector(Eigen::Index n, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = d(rng);
  return v;
}

inline Matrix normal_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
  return m;
}

inline Eigen::VectorXd standardize(Eigen::VectorXd v) {
  const double m = v.mean();
  const double s = std::sqrt((v.array() - m).square().mean());
  return ((v.array() - m) / s).matrix();
}

inline Problem make_problem(std::uint64_t seed, int n_groups = 2, int n = 16, int obs_dim = 3, int act_dim = 2) {
  Rng rng(seed);
  Problem p{ActorCritic(obs_dim, act_dim, n_groups, tiny_model(), derive_seed(seed, 7)), {}, {}, {}};
  // Move away from the small-gain initialization so every layer matters.
  std::normal_distribution<double> jitter(0.0, 0.5);
  for (double& v : p.model.policy_params().values()) v += jitter(rng);
  for (int h = 0; h < p.model.n_critics(); ++h) {
    for (double& v : p.model.critic_params(h).values()) v += jitter(rng);
  }

  Minibatch& mb = p.mb;
  mb.observations = normal_matrix(n, obs_dim, rng);
  const Matrix mean = p.model.mean_action(mb.observations);
  mb.actions = mean + normal_matrix(n, act_dim, rng, 0.7);
  {
    Tape tape;
    const auto out = p.model.policy_output(tape, p.model.policy_params(), tape.constant(mb.observations));
    const Matrix lp = gaussian_logprob(out, mb.actions).value();
    mb.log_prob_old = Eigen::Map<const Eigen::VectorXd>(lp.data(), n) + normal_vector(n, rng, 0.25);
    // The clipped surrogate has no derivative at ratio 1 +- clip; keep
    // finite-difference stencils off those edges.
    const double clip = AlgorithmConfig{}.clip;
    for (int i = 0; i < n; ++i) {
      const double r = std::exp(lp.data()[i] - mb.log_prob_old(i));
      if (std::abs(r - 1.0 - clip) < 1e-3 || std::abs(r - 1.0 + clip) < 1e-3) mb.log_prob_old(i) += 0.01;
    }
  }
  mb.reward_adv = standardize(normal_vector(n, rng));
  mb.cost_adv.resize(n, n_groups);
  mb.cost_adv_norm.resize(n, n_groups);
  p.ctx.gamma = 0.99;
  for (int g = 0; g < n_groups; ++g) {
    const Eigen::VectorXd raw = normal_vector(n, rng, 0.3) + Eigen::VectorXd::Constant(n, 0.05 * (g + 1));
    mb.cost_adv.col(g) = raw;
    const double m = raw.mean();
    const double s = std::sqrt((raw.array() - m).square().mean());
    mb.cost_adv_norm.col(g) = (raw.array() - m) / s;
    p.ctx.stats.push_back({m, s, false});
    p.ctx.cost_return.push_back(1.0 + g);
    p.ctx.threshold.push_back(0.5);
  }
  mb.reward_returns = normal_vector(n, rng);
  mb.cost_returns = normal_matrix(n, n_groups, rng).cwiseAbs();
  p.duals.kappa.assign(static_cast<std::size_t>(n_groups), 1.5);
  p.duals.lambda.assign(static_cast<std::size_t>(n_groups), 0.7);
  p.duals.nu.assign(static_cast<std::size_t>(n_groups), 0.1);
  p.duals.entropy_coef = 0.01;
  return p;
}

// Shifts J_C so that every violation term has the requested sign at the
// current parameters: +1 violated, -1 satisfied. Group g sits at
// sign * (margin + g * spread).
inline void set_violation_sign(Problem& p, const AlgorithmConfig& cfg, bool normalized, double sign,
                               double margin = 0.5, double spread = 0.0) {
  for (int g = 0; g < p.mb.n_groups(); ++g) {
    Tape tape;
    const auto out = p.model.policy_output(tape, p.model.policy_params(), tape.constant(p.mb.observations));
    Var r = ratio(gaussian_logprob(out, p.mb.actions), p.mb.log_prob_old);
    const double surrogate = violation_term(r, p.mb, p.ctx, g, normalized, cfg.clip).value.scalar() -
                             violation_offset(p.ctx, g, normalized);
    // Solve for the offset that puts the term at sign * margin.
    const double target_offset = sign * (margin + g * spread) - surrogate;
    const auto gi = static_cast<std::size_t>(g);
    const double scale = normalized ? p.ctx.stats[gi].std : 1.0;
    const double shift = normalized ? p.ctx.stats[gi].mean : 0.0;
    p.ctx.cost_return[gi] = (target_offset * scale - shift) / (1.0 - p.ctx.gamma) + p.ctx.threshold[gi];
  }
}

inline double objective_value(const Problem& p, const ParamVector& theta, const AlgorithmConfig& cfg) {
  Tape tape;
  return policy_objective(tape, p.model, theta, p.mb, p.ctx, p.duals, cfg).objective.scalar();
}

inline ParamVector objective_grad(const Problem& p, const ParamVector& theta, const AlgorithmConfig& cfg,
                                  ObjectiveTerms* terms_out = nullptr) {
  Tape tape;
  const ObjectiveTerms terms = policy_objective(tape, p.model, theta, p.mb, p.ctx, p.duals, cfg);
  if (terms_out != nullptr) *terms_out = terms;
  return grad(tape, terms.objective, theta);
}

// ||a - b|| / max(||a||, ||b||), 0 when both vanish.
inline double relative_error(const ParamVector& a, const ParamVector& b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double denom = std::sqrt(std::max(na, nb));
  return denom == 0.0 ? 0.0 : std::sqrt(diff) / denom;
}

inline double fd_relative_error(const Problem& p, const AlgorithmConfig& cfg, ObjectiveTerms* terms = nullptr) {
  const ParamVector& theta = p.model.policy_params();
  const ParamVector analytic = objective_grad(p, theta, cfg, terms);
  const ParamVector numeric =
      oracle::finite_diff_grad([&](const ParamVector& x) { return objective_value(p, x, cfg); }, theta, 1e-5);
  return relative_error(analytic, numeric);
}

}  // namespace fixtures
