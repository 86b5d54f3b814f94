#pragma once

#include <vector>

#include "cmdp/envs/tabular.hpp"
#include "cmdp/rollout/batch.hpp"

namespace cmdp {

enum class CostReturnMethod { kEmpirical, kCriticInitial };

struct CostReturnEstimate {
  double value = 0.0;
  CostReturnMethod method = CostReturnMethod::kEmpirical;
  int episodes = 0;  // episode starts averaged over
};

// J_C of cost group `group` under the sampling policy. kEmpirical averages
// the discounted cost sum from every episode start in the batch, bootstrapped
// with the cost critic where an episode is truncated or cut by the batch end.
// kCriticInitial averages the critic's value at those starts. Throws
// std::invalid_argument when the batch has no episode start.
CostReturnEstimate estimate_cost_return(const RolloutBatch& batch, int group, double gamma,
                                        CostReturnMethod method = CostReturnMethod::kEmpirical);

// Same estimator applied to the reward channel.
double estimate_reward_return(const RolloutBatch& batch, double gamma);

struct ViolationCounts {
  std::vector<double> per_constraint;
  double total = 0.0;
  int episodes = 0;
};

// Violating timesteps per completed episode (start and end both inside the
// batch), per constraint; total sums the constraints. Throws
// std::invalid_argument when no episode completes inside the batch.
ViolationCounts violations_per_episode(const RolloutBatch& batch);

// Samples a TabularPolicy through a TabularEnv's action encoding. Critic
// values are all zero (`n_groups` cost columns).
class TabularSampler final : public RolloutPolicy {
 public:
  TabularSampler(TabularPolicy policy, const TabularEnv& env, int n_groups);
  ActionBatch sample(const Matrix& observations, Rng& rng) const override;
  Matrix values(const Matrix& observations) const override;

 private:
  TabularPolicy policy_;
  std::vector<double> action_values_;
  int n_groups_;
};

}  // namespace cmdp
