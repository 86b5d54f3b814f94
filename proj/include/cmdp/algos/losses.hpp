#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cmdp/algos/config.hpp"
#include "cmdp/algos/model.hpp"
#include "cmdp/diffcore/tape.hpp"
#include "cmdp/rollout/batch.hpp"

namespace cmdp {

// Gathered rows of a RolloutBatch. Cost matrices have one column per group.
struct Minibatch {
  Matrix observations;
  Matrix actions;
  Eigen::VectorXd log_prob_old;
  Eigen::VectorXd reward_adv;  // normalized
  Matrix cost_adv;             // raw
  Matrix cost_adv_norm;
  Eigen::VectorXd reward_returns;
  Matrix cost_returns;

  Eigen::Index size() const { return observations.rows(); }
  int n_groups() const { return static_cast<int>(cost_adv.cols()); }
};

Minibatch make_minibatch(const RolloutBatch& batch, std::span<const std::size_t> rows);

// Batch-level quantities entering the violation terms, one entry per group.
struct ConstraintContext {
  std::vector<double> cost_return;  // J_C(pi_theta)
  std::vector<double> threshold;    // epsilon
  std::vector<NormStats> stats;     // raw cost-advantage mean / std
  double gamma = 0.99;
};

// Multipliers in effect for one policy update.
struct DualValues {
  std::vector<double> kappa;
  std::vector<double> lambda;  // effective (post-softplus)
  std::vector<double> nu;
  double entropy_coef = 0.0;
};

inline constexpr double kRatioLogClamp = 30.0;

// exp(logp_new - logp_old), exponent clamped to +-30. `clamped` counts
// clamped entries when non-null.
Var ratio(Var log_prob_new, const Eigen::VectorXd& log_prob_old, int* clamped = nullptr);

// mean(min(r A, clip(r, 1-d, 1+d) A))
Var clip_surrogate_reward(Var ratio, const Eigen::VectorXd& adv, double clip);
// mean(max(r A, clip(r, 1-d, 1+d) A)): pessimistic upper surrogate of the cost.
Var clip_surrogate_cost(Var ratio, const Eigen::VectorXd& adv, double clip);

// Constant part of the violation term for group g:
//   raw:        (1 - gamma)(J_C - eps)
//   normalized: ((1 - gamma)(J_C - eps) + mu) / sigma
double violation_offset(const ConstraintContext& ctx, int group, bool normalized);

struct ViolationTerm {
  Var value;
  bool degenerate = false;
};

// L_C^CLIP + offset, in raw or normalized advantages. For a degenerate
// normalized group, the raw form divided by the std floor.
ViolationTerm violation_term(Var ratio, const Minibatch& mb, const ConstraintContext& ctx, int group,
                             bool normalized, double clip);

// ln(-x) / k; throws NumericError for x >= 0 or k <= 0.
double barrier(double x, double k);
Var barrier(Var x, double k);

// Index of the most violated group (largest positive term, ties to the
// lowest index), or -1 when every term is <= 0.
int crpo_select(std::span<const double> violation_terms);

// nu <- clamp(nu - lr (eps - J_C), 0, nu_max)
double focops_nu_update(double nu, double threshold, double cost_return, const AlgorithmConfig& cfg);

// Process-wide count of barrier evaluations, for run reports.
std::int64_t barrier_evaluation_count();

struct ObjectiveTerms {
  Var objective;  // to be maximized
  std::vector<double> violation;  // violation term value per group (when computed)
  std::vector<std::uint8_t> degenerate;
  int crpo_group = -1;  // CRPO: -1 reward step, else the constraint stepped on
  int recovery_groups = 0;  // N-IPO: groups routed to the recovery term
  int barrier_groups = 0;
  int clamped_ratios = 0;
};

// Builds the per-algorithm policy objective at parameters `theta`.
// Every objective includes +entropy_coef * entropy.
ObjectiveTerms policy_objective(Tape& tape, const ActorCritic& model, const ParamVector& theta,
                                const Minibatch& mb, const ConstraintContext& ctx, const DualValues& duals,
                                const AlgorithmConfig& cfg);

// Mean squared error of critic `head` against its return targets.
Var critic_loss(Tape& tape, const ActorCritic& model, int head, const ParamVector& params,
                const Minibatch& mb);

}  // namespace cmdp
