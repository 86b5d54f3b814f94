#include "cmdp/rollout/estimates.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cmdp {
namespace {

struct ChannelEstimate {
  double empirical = 0.0;
  double critic = 0.0;
  int starts = 0;
};

ChannelEstimate estimate_channel(const RolloutBatch& b, int column, double gamma) {
  ChannelEstimate out;
  for (int e = 0; e < b.envs; ++e) {
    for (int t0 = 0; t0 < b.steps; ++t0) {
      const std::size_t start = b.row(t0, e);
      if (!b.episode_start[start]) continue;
      double total = 0.0;
      double w = 1.0;
      int t = t0;
      for (; t < b.steps; ++t) {
        const std::size_t r = b.row(t, e);
        total += w * b.signals(static_cast<Eigen::Index>(r), column);
        w *= gamma;
        if (b.episode_end(r)) break;
      }
      const int last = std::min(t, b.steps - 1);
      const std::size_t lr = b.row(last, e);
      if (!b.terminated[lr]) {
        const double boot = b.next_values(static_cast<Eigen::Index>(lr), column);
        if (!std::isfinite(boot)) throw std::invalid_argument("missing bootstrap value for cost return");
        total += w * boot;
      }
      out.empirical += total;
      out.critic += b.values(static_cast<Eigen::Index>(start), column);
      ++out.starts;
    }
  }
  if (out.starts == 0) throw std::invalid_argument("batch contains no episode start");
  out.empirical /= out.starts;
  out.critic /= out.starts;
  return out;
}

}  // namespace

CostReturnEstimate estimate_cost_return(const RolloutBatch& batch, int group, double gamma,
                                        CostReturnMethod method) {
  if (group < 0 || group >= batch.n_groups) throw std::out_of_range("cost group out of range");
  const auto est = estimate_channel(batch, 1 + group, gamma);
  return {method == CostReturnMethod::kEmpirical ? est.empirical : est.critic, method, est.starts};
}

double estimate_reward_return(const RolloutBatch& batch, double gamma) {
  return estimate_channel(batch, 0, gamma).empirical;
}

ViolationCounts violations_per_episode(const RolloutBatch& b) {
  ViolationCounts out;
  out.per_constraint.assign(static_cast<std::size_t>(b.n_constraints), 0.0);
  for (int e = 0; e < b.envs; ++e) {
    int start = -1;
    std::vector<double> running(static_cast<std::size_t>(b.n_constraints), 0.0);
    for (int t = 0; t < b.steps; ++t) {
      const std::size_t r = b.row(t, e);
      if (b.episode_start[r]) {
        start = t;
        std::fill(running.begin(), running.end(), 0.0);
      }
      if (start < 0) continue;
      for (int i = 0; i < b.n_constraints; ++i) {
        if (b.is_violated(r, i)) running[static_cast<std::size_t>(i)] += 1.0;
      }
      if (b.episode_end(r)) {
        for (std::size_t i = 0; i < running.size(); ++i) out.per_constraint[i] += running[i];
        ++out.episodes;
        start = -1;
      }
    }
  }
  if (out.episodes == 0) throw std::invalid_argument("batch contains no completed episode");
  for (double& v : out.per_constraint) {
    v /= out.episodes;
    out.total += v;
  }
  return out;
}

TabularSampler::TabularSampler(TabularPolicy policy, const TabularEnv& env, int n_groups)
    : policy_(std::move(policy)), n_groups_(n_groups) {
  policy_.validate();
  if (policy_.n_states != env.cmdp().n_states || policy_.n_actions != env.cmdp().n_actions) {
    throw std::invalid_argument("policy does not match the environment");
  }
  for (int a = 0; a < policy_.n_actions; ++a) action_values_.push_back(env.action_value(a));
}

ActionBatch TabularSampler::sample(const Matrix& observations, Rng& rng) const {
  ActionBatch out;
  out.actions.resize(observations.rows(), 1);
  out.log_probs.resize(static_cast<std::size_t>(observations.rows()));
  for (Eigen::Index r = 0; r < observations.rows(); ++r) {
    Eigen::Index s = 0;
    observations.row(r).maxCoeff(&s);
    const double u = uniform01(rng);
    double acc = 0.0;
    int a = policy_.n_actions - 1;
    for (int k = 0; k < policy_.n_actions; ++k) {
      acc += policy_.prob(static_cast<int>(s), k);
      if (u < acc) {
        a = k;
        break;
      }
    }
    out.actions(r, 0) = action_values_[static_cast<std::size_t>(a)];
    out.log_probs[static_cast<std::size_t>(r)] = std::log(policy_.prob(static_cast<int>(s), a));
  }
  return out;
}

Matrix TabularSampler::values(const Matrix& observations) const {
  return Matrix::Zero(observations.rows(), 1 + n_groups_);
}

}  // namespace cmdp
