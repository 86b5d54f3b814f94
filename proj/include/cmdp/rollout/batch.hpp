#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "cmdp/diffcore/param_vector.hpp"
#include "cmdp/envs/cmdp_spec.hpp"
#include "cmdp/rng.hpp"
#include "cmdp/rollout/advantage.hpp"

namespace cmdp {

struct ActionBatch {
  Matrix actions;
  std::vector<double> log_probs;
};

// What collect() needs from a policy. values() returns one column for the
// reward critic followed by one column per cost group.
class RolloutPolicy {
 public:
  virtual ~RolloutPolicy() = default;
  virtual ActionBatch sample(const Matrix& observations, Rng& rng) const = 0;
  virtual Matrix values(const Matrix& observations) const = 0;
};

struct NormStats {
  double mean = 0.0;
  double std = 1.0;
  bool degenerate = false;
};

// Steps x envs samples stored row-wise at index t * envs + e. Value-like
// matrices hold the reward channel in column 0 and cost group g in column 1 + g.
struct RolloutBatch {
  int steps = 0;
  int envs = 0;
  int n_constraints = 0;
  int n_groups = 0;
  std::vector<int> cost_group_map;

  Matrix observations;
  Matrix actions;
  std::vector<double> log_prob_old;
  std::vector<double> rewards;
  Matrix costs;        // per constraint
  Matrix signals;      // reward, then summed cost per group
  Matrix excess;       // per constraint
  std::vector<std::uint8_t> violated;  // row-major (sample, constraint)
  Matrix values;
  Matrix next_values;  // V(s_{t+1}) before auto-reset
  std::vector<std::uint8_t> terminated;
  std::vector<std::uint8_t> truncated;
  std::vector<std::uint8_t> episode_start;

  // Filled by compute_advantages().
  Matrix advantages;
  Matrix normalized_advantages;
  Matrix returns;
  std::vector<NormStats> norm_stats;

  std::size_t size() const { return static_cast<std::size_t>(steps) * static_cast<std::size_t>(envs); }
  std::size_t row(int t, int e) const {
    return static_cast<std::size_t>(t) * static_cast<std::size_t>(envs) + static_cast<std::size_t>(e);
  }
  bool is_violated(std::size_t sample, int constraint) const {
    return violated[sample * static_cast<std::size_t>(n_constraints) + static_cast<std::size_t>(constraint)] != 0;
  }
  bool episode_end(std::size_t sample) const { return terminated[sample] || truncated[sample]; }
};

// A set of environments stepped in lockstep. Environment e is reset with
// derive_seed(seed, e) and auto-resets from its own stream afterwards.
class EnvPool {
 public:
  EnvPool(std::vector<std::unique_ptr<Env>> envs, std::uint64_t seed);

  int size() const { return static_cast<int>(envs_.size()); }
  const CmdpSpec& spec() const { return envs_.front()->spec(); }
  Env& env(int i) { return *envs_[static_cast<std::size_t>(i)]; }

 private:
  friend RolloutBatch collect(EnvPool&, const RolloutPolicy&, int, Rng&);

  std::vector<std::unique_ptr<Env>> envs_;
  Matrix observations_;
  std::vector<std::uint8_t> fresh_;
};

// Samples steps_per_env transitions from every environment. Throws
// NumericError on a non-finite action or observation.
RolloutBatch collect(EnvPool& pool, const RolloutPolicy& policy, int steps_per_env, Rng& rng);

// GAE for the reward channel and every cost group, lambda-returns as critic
// targets, and batch-wide normalization of every channel.
void compute_advantages(RolloutBatch& batch, double gamma, double lambda);

}  // namespace cmdp
