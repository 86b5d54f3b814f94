#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cmdp/algos/config.hpp"
#include "cmdp/algos/duals.hpp"
#include "cmdp/algos/losses.hpp"
#include "cmdp/algos/model.hpp"
#include "cmdp/diffcore/adam.hpp"
#include "cmdp/rollout/batch.hpp"

namespace cmdp {

using EnvFactory = std::function<std::unique_ptr<Env>()>;

struct TrainerSettings {
  AlgorithmConfig algo;
  ModelConfig model;
  int n_envs = 4;
  int steps_per_env = 256;
  int eval_episodes = 0;  // 0: metrics come from the training batch
  std::uint64_t seed = 0;
  bool wall_clock = true;  // false: timing fields are reported as 0
};

struct EvalSummary {
  int episodes = 0;
  double reward_mean = 0.0;
  double reward_std = 0.0;
  double violations_total = 0.0;
  std::vector<double> violations;  // per constraint, per episode
  double mean_excess = 0.0;        // summed excess per timestep
  double mean_deviation = 0.0;     // excess per violation event
  double min_cost_value = 0.0;     // smallest cost-critic prediction seen
};

struct MetricsRecord {
  std::int64_t iteration = 0;
  double ep_reward_mean = 0.0;
  double ep_reward_std = 0.0;
  double violations_total = 0.0;
  std::vector<double> violations;    // per constraint
  std::vector<double> cost_returns;  // J_C per cost group
  double kappa = 0.0;                // means over groups
  double lambda_eff = 0.0;
  double nu = 0.0;
  double entropy_coef = 0.0;
  double t_update_s = 0.0;
  double t_collect_s = 0.0;

  // Diagnostics outside the CSV schema.
  double mean_excess = 0.0;
  double mean_deviation = 0.0;  // excess per violation event
  double min_cost_value = 0.0;
  int recovery_steps = 0;
  int barrier_steps = 0;
  int crpo_constraint_steps = 0;
  int clamped_ratios = 0;
  int degenerate_groups = 0;
  std::vector<double> violation_terms;  // mean over minibatches, per group
  double norm_max_mean_error = 0.0;  // over non-degenerate channels
  double norm_max_std_error = 0.0;
};

// Full training state for one run: networks, optimizers, dual variables,
// environments and RNG streams.
class Trainer {
 public:
  Trainer(TrainerSettings settings, EnvFactory factory);

  // One collect / update / dual-update cycle.
  MetricsRecord train_iteration();
  // Deterministic-mean episodes on freshly seeded environments.
  EvalSummary evaluate(int episodes) const;

  std::int64_t iteration() const { return iteration_; }
  const TrainerSettings& settings() const { return settings_; }
  const CmdpSpec& spec() const { return spec_; }
  ActorCritic& model() { return model_; }
  const ActorCritic& model() const { return model_; }
  const LagrangeState& lagrange() const { return lagrange_; }
  const std::vector<double>& nu() const { return nu_; }
  double min_cost_value() const { return min_cost_value_; }

  // State summary written next to a numeric abort.
  nlohmann::json snapshot() const;

 private:
  std::vector<double> kappas() const;

  TrainerSettings settings_;
  EnvFactory factory_;
  CmdpSpec spec_;
  ActorCritic model_;
  EnvPool pool_;
  Rng collect_rng_;
  Rng shuffle_rng_;
  AdamState policy_opt_;
  std::vector<AdamState> critic_opt_;
  LagrangeState lagrange_;
  std::vector<double> nu_;
  std::int64_t iteration_ = 0;
  double min_cost_value_ = 0.0;
  nlohmann::json last_diagnostics_;
};

}  // namespace cmdp
