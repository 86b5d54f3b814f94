#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cmdp/envs/cmdp_spec.hpp"
#include "cmdp/rng.hpp"

namespace cmdp {

// Finite CMDP with tables indexed [s][a][s'] (row-major, flattened).
struct TabularCmdp {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> transition;
  std::vector<double> reward;
  std::vector<std::vector<double>> cost;  // one table per constraint
  std::vector<double> initial_dist;

  std::size_t index(int s, int a, int s2) const {
    return (static_cast<std::size_t>(s) * static_cast<std::size_t>(n_actions) +
            static_cast<std::size_t>(a)) * static_cast<std::size_t>(n_states) +
           static_cast<std::size_t>(s2);
  }
  double p(int s, int a, int s2) const { return transition[index(s, a, s2)]; }
  int n_constraints() const { return static_cast<int>(cost.size()); }

  // Throws std::invalid_argument on bad sizes or non-stochastic rows.
  void validate() const;
};

// probs[s][a], rows sum to 1.
struct TabularPolicy {
  int n_states = 0;
  int n_actions = 0;
  std::vector<double> probs;

  double prob(int s, int a) const {
    return probs[static_cast<std::size_t>(s) * static_cast<std::size_t>(n_actions) +
                 static_cast<std::size_t>(a)];
  }
  void validate() const;

  static TabularPolicy constant(int n_states, std::span<const double> action_probs);
};

struct TabularTransition {
  int next_state = 0;
  double reward = 0.0;
  std::vector<double> costs;
};

// Samples s' ~ p(.|s,a) and looks up reward and costs. Throws
// std::out_of_range for bad indices.
TabularTransition tabular_step(const TabularCmdp& cmdp, int state, int action, Rng& rng);

int sample_initial_state(const TabularCmdp& cmdp, Rng& rng);

inline constexpr int kChainStay = 0;
inline constexpr int kChainAdvance = 1;

// Chain of n_states cells, start at cell 0. "advance" moves right with
// probability 1 - slip and otherwise stays; the right end is absorbing.
// Reward 1 on every step taken from the right end. Cost channel 0 is 1
// whenever "advance" is taken in the left half (s < n/2); channel 1
// ("contact") is 1 when an advance slips.
TabularCmdp make_chain_cmdp(int n_states, double slip);

// Env adapter: one-hot observations; a 1-d continuous action a selects
// index clamp(floor(a + n_actions / 2), 0, n_actions - 1).
class TabularEnv final : public Env {
 public:
  TabularEnv(TabularCmdp cmdp, double discount, int episode_length,
             std::vector<double> thresholds = {}, std::vector<int> cost_group_map = {});

  const CmdpSpec& spec() const override { return spec_; }
  std::vector<double> reset(std::uint64_t seed) override;
  std::vector<double> reset() override;
  StepResult step(std::span<const double> action) override;

  int state() const { return state_; }
  const TabularCmdp& cmdp() const { return cmdp_; }

  int action_index(double a) const;
  // Centre of the action bin that selects `index`.
  double action_value(int index) const;
  std::vector<double> observation(int s) const;

 private:
  TabularCmdp cmdp_;
  CmdpSpec spec_;
  Rng rng_;
  int state_ = 0;
  int steps_ = 0;
};

}  // namespace cmdp
