#include "cmdp/algos/losses.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>

#include "cmdp/error.hpp"

namespace cmdp {
namespace {

std::atomic<std::int64_t> g_barrier_evaluations{0};

Matrix column(const Eigen::VectorXd& v) {
  Matrix m(v.size(), 1);
  for (Eigen::Index i = 0; i < v.size(); ++i) m(i, 0) = v(i);
  return m;
}

Eigen::VectorXd col(const Matrix& m, int c) { return m.col(c); }

}  // namespace

Minibatch make_minibatch(const RolloutBatch& b, std::span<const std::size_t> rows) {
  if (b.advantages.rows() != static_cast<Eigen::Index>(b.size())) {
    throw std::logic_error("make_minibatch: advantages not computed");
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  const int G = b.n_groups;
  Minibatch mb;
  mb.observations.resize(n, b.observations.cols());
  mb.actions.resize(n, b.actions.cols());
  mb.log_prob_old.resize(n);
  mb.reward_adv.resize(n);
  mb.reward_returns.resize(n);
  mb.cost_adv.resize(n, G);
  mb.cost_adv_norm.resize(n, G);
  mb.cost_returns.resize(n, G);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]);
    if (r < 0 || r >= static_cast<Eigen::Index>(b.size())) throw std::out_of_range("minibatch row out of range");
    mb.observations.row(i) = b.observations.row(r);
    mb.actions.row(i) = b.actions.row(r);
    mb.log_prob_old(i) = b.log_prob_old[static_cast<std::size_t>(r)];
    mb.reward_adv(i) = b.normalized_advantages(r, 0);
    mb.reward_returns(i) = b.returns(r, 0);
    for (int g = 0; g < G; ++g) {
      mb.cost_adv(i, g) = b.advantages(r, 1 + g);
      mb.cost_adv_norm(i, g) = b.normalized_advantages(r, 1 + g);
      mb.cost_returns(i, g) = b.returns(r, 1 + g);
    }
  }
  return mb;
}

Var ratio(Var log_prob_new, const Eigen::VectorXd& log_prob_old, int* clamped) {
  Tape& tape = *log_prob_new.tape();
  if (log_prob_new.rows() != log_prob_old.size() || log_prob_new.cols() != 1) {
    throw ShapeError("ratio: log-probability shapes differ");
  }
  Var diff = log_prob_new - tape.constant(column(log_prob_old));
  if (clamped != nullptr) {
    const Matrix& d = diff.value();
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
      if (std::abs(d(i, 0)) > kRatioLogClamp) ++*clamped;
    }
  }
  return exp(clip(diff, -kRatioLogClamp, kRatioLogClamp));
}

Var clip_surrogate_reward(Var r, const Eigen::VectorXd& adv, double clip_eps) {
  Tape& tape = *r.tape();
  Var a = tape.constant(column(adv));
  return mean(min(r * a, clip(r, 1.0 - clip_eps, 1.0 + clip_eps) * a));
}

Var clip_surrogate_cost(Var r, const Eigen::VectorXd& adv, double clip_eps) {
  Tape& tape = *r.tape();
  Var a = tape.constant(column(adv));
  return mean(max(r * a, clip(r, 1.0 - clip_eps, 1.0 + clip_eps) * a));
}

double violation_offset(const ConstraintContext& ctx, int group, bool normalized) {
  const auto g = static_cast<std::size_t>(group);
  const double raw = (1.0 - ctx.gamma) * (ctx.cost_return.at(g) - ctx.threshold.at(g));
  if (!normalized) return raw;
  return (raw + ctx.stats.at(g).mean) / ctx.stats.at(g).std;
}

ViolationTerm violation_term(Var r, const Minibatch& mb, const ConstraintContext& ctx, int group,
                             bool normalized, double clip_eps) {
  const auto g = static_cast<std::size_t>(group);
  if (!normalized) {
    return {clip_surrogate_cost(r, col(mb.cost_adv, group), clip_eps) + violation_offset(ctx, group, false),
            false};
  }
  if (ctx.stats.at(g).degenerate) {
    Var raw = clip_surrogate_cost(r, col(mb.cost_adv, group), clip_eps) + violation_offset(ctx, group, false);
    return {raw * (1.0 / kStdFloor), true};
  }
  return {clip_surrogate_cost(r, col(mb.cost_adv_norm, group), clip_eps) + violation_offset(ctx, group, true),
          false};
}

double barrier(double x, double k) {
  if (!(k > 0.0)) throw NumericError("barrier: k must be positive");
  if (!(x < 0.0)) throw NumericError("barrier evaluated at a non-negative argument");
  ++g_barrier_evaluations;
  return std::log(-x) / k;
}

Var barrier(Var x, double k) {
  if (!(k > 0.0)) throw NumericError("barrier: k must be positive");
  if (!(x.scalar() < 0.0)) throw NumericError("barrier evaluated at a non-negative argument");
  ++g_barrier_evaluations;
  return log(-x) * (1.0 / k);
}

std::int64_t barrier_evaluation_count() { return g_barrier_evaluations.load(); }

int crpo_select(std::span<const double> violation_terms) {
  int best = -1;
  double best_value = 0.0;
  for (std::size_t g = 0; g < violation_terms.size(); ++g) {
    if (violation_terms[g] > best_value) {
      best = static_cast<int>(g);
      best_value = violation_terms[g];
    }
  }
  return best;
}

double focops_nu_update(double nu, double threshold, double cost_return, const AlgorithmConfig& cfg) {
  return std::clamp(nu - cfg.nu_lr * (threshold - cost_return), 0.0, cfg.nu_max);
}

ObjectiveTerms policy_objective(Tape& tape, const ActorCritic& model, const ParamVector& theta,
                                const Minibatch& mb, const ConstraintContext& ctx, const DualValues& duals,
                                const AlgorithmConfig& cfg) {
  const int G = mb.n_groups();
  ObjectiveTerms out;
  out.violation.assign(static_cast<std::size_t>(G), 0.0);
  out.degenerate.assign(static_cast<std::size_t>(G), 0);

  const auto pol = model.policy_output(tape, theta, tape.constant(mb.observations));
  Var logp = gaussian_logprob(pol, mb.actions);
  Var r = ratio(logp, mb.log_prob_old, &out.clamped_ratios);
  Var entropy_bonus = gaussian_entropy(pol.log_std) * duals.entropy_coef;

  auto violations = [&](bool normalized) {
    std::vector<Var> terms;
    for (int g = 0; g < G; ++g) {
      auto vt = violation_term(r, mb, ctx, g, normalized, cfg.clip);
      out.violation[static_cast<std::size_t>(g)] = vt.value.scalar();
      out.degenerate[static_cast<std::size_t>(g)] = vt.degenerate ? 1 : 0;
      terms.push_back(vt.value);
    }
    return terms;
  };

  switch (cfg.algorithm) {
    case Algorithm::kPpo:
      out.objective = clip_surrogate_reward(r, mb.reward_adv, cfg.clip) + entropy_bonus;
      break;

    case Algorithm::kP3o:
    case Algorithm::kNp3o: {
      Var obj = clip_surrogate_reward(r, mb.reward_adv, cfg.clip) + entropy_bonus;
      const auto terms = violations(cfg.algorithm == Algorithm::kNp3o);
      Var zero = tape.constant(0.0);
      for (int g = 0; g < G; ++g) {
        obj = obj - max(zero, terms[static_cast<std::size_t>(g)]) * duals.kappa.at(static_cast<std::size_t>(g));
      }
      out.objective = obj;
      break;
    }

    case Algorithm::kPpoLagrangian: {
      Var obj = clip_surrogate_reward(r, mb.reward_adv, cfg.clip) + entropy_bonus;
      for (int g = 0; g < G; ++g) {
        obj = obj - clip_surrogate_cost(r, col(mb.cost_adv_norm, g), cfg.clip) *
                        duals.lambda.at(static_cast<std::size_t>(g));
      }
      out.objective = obj;
      break;
    }

    case Algorithm::kNipo: {
      Var obj = clip_surrogate_reward(r, mb.reward_adv, cfg.clip) + entropy_bonus;
      const auto terms = violations(true);
      for (int g = 0; g < G; ++g) {
        const Var& v = terms[static_cast<std::size_t>(g)];
        if (v.scalar() < 0.0) {
          obj = obj + barrier(v, cfg.barrier_k);
          ++out.barrier_groups;
        } else {
          obj = obj - clip_surrogate_cost(r, col(mb.cost_adv_norm, g), cfg.clip) * cfg.lambda_rec;
          ++out.recovery_groups;
        }
      }
      out.objective = obj;
      break;
    }

    case Algorithm::kCrpo: {
      Var reward_obj = clip_surrogate_reward(r, mb.reward_adv, cfg.clip) + entropy_bonus;
      violations(true);
      out.crpo_group = crpo_select(out.violation);
      if (out.crpo_group < 0) {
        out.objective = reward_obj;
      } else {
        out.objective = -clip_surrogate_cost(r, col(mb.cost_adv_norm, out.crpo_group), cfg.clip) + entropy_bonus;
      }
      break;
    }

    case Algorithm::kFocops: {
      const double temp = cfg.focops_temperature;
      if (!(temp > 0.0)) throw std::invalid_argument("focops_temperature must be positive");
      const Matrix& rv = r.value();
      Matrix weights(mb.size(), 1);
      for (Eigen::Index i = 0; i < mb.size(); ++i) {
        double shaped = mb.reward_adv(i);
        for (int g = 0; g < G; ++g) shaped -= duals.nu.at(static_cast<std::size_t>(g)) * mb.cost_adv_norm(i, g);
        const bool inside = rv(i, 0) >= 1.0 - cfg.clip && rv(i, 0) <= 1.0 + cfg.clip;
        weights(i, 0) = inside ? std::exp(std::clamp(shaped / temp, -kRatioLogClamp, kRatioLogClamp)) : 0.0;
      }
      out.objective = mean(tape.constant(std::move(weights)) * logp) + entropy_bonus;
      break;
    }
  }
  return out;
}

Var critic_loss(Tape& tape, const ActorCritic& model, int head, const ParamVector& params, const Minibatch& mb) {
  Var pred = model.critic_output(tape, head, params, tape.constant(mb.observations));
  const Eigen::VectorXd target = head == 0 ? mb.reward_returns : col(mb.cost_returns, head - 1);
  return mean(square(pred - tape.constant(column(target))));
}

}  // namespace cmdp
