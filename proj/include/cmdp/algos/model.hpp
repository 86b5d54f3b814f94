#pragma once

#include <cstdint>
#include <vector>

#include "cmdp/algos/config.hpp"
#include "cmdp/diffcore/gaussian.hpp"
#include "cmdp/diffcore/nn.hpp"
#include "cmdp/rollout/batch.hpp"

namespace cmdp {

// Gaussian MLP policy with a state-independent log_std, one reward critic and
// one cost critic per cost group. Each network owns its own ParamVector.
class ActorCritic final : public RolloutPolicy {
 public:
  ActorCritic(int observation_dim, int action_dim, int n_groups, const ModelConfig& cfg,
              std::uint64_t seed);

  int observation_dim() const { return observation_dim_; }
  int action_dim() const { return action_dim_; }
  int n_groups() const { return n_groups_; }
  int n_critics() const { return 1 + n_groups_; }

  ParamVector& policy_params() { return policy_params_; }
  const ParamVector& policy_params() const { return policy_params_; }
  // 0 = reward critic, 1 + g = cost critic of group g.
  ParamVector& critic_params(int head) { return critic_params_.at(static_cast<std::size_t>(head)); }
  const ParamVector& critic_params(int head) const {
    return critic_params_.at(static_cast<std::size_t>(head));
  }

  GaussianPolicyOutput policy_output(Tape& tape, const ParamVector& theta, Var observations) const;
  Var critic_output(Tape& tape, int head, const ParamVector& params, Var observations) const;

  // Every network's segments concatenated, for checkpoints. unpack() copies
  // segments back by name and throws std::invalid_argument on a mismatch.
  ParamVector pack() const;
  void unpack(const ParamVector& packed);

  Matrix mean_action(const Matrix& observations) const;
  ActionBatch sample(const Matrix& observations, Rng& rng) const override;
  Matrix values(const Matrix& observations) const override;

 private:
  int observation_dim_;
  int action_dim_;
  int n_groups_;
  Mlp policy_net_;
  std::size_t log_std_segment_ = 0;
  std::vector<Mlp> critics_;
  ParamVector policy_params_;
  std::vector<ParamVector> critic_params_;
};

}  // namespace cmdp
