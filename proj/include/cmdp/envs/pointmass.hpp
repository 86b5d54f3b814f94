#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "cmdp/envs/cmdp_spec.hpp"
#include "cmdp/rng.hpp"

namespace cmdp {

// Indices of the point-mass constraint channels.
enum PointMassConstraint : int {
  kCommandRate = 0,    // first difference of the action
  kCommandJerk = 1,    // second difference of the action
  kSpeed = 2,          // |v_d| <= v_max
  kActuation = 3,      // |a_d| <= a_max
  kPositionBox = 4,    // |x_d| <= position_bound
  kPointMassConstraintCount = 5,
};

struct PointMassConfig {
  double dt = 0.02;
  int episode_length = 200;
  double v_max = 2.5;
  double a_max = 2.0;
  double position_bound = 6.0;
  // Limits on |a_t - a_{t-1}| / dt and |a_t - 2 a_{t-1} + a_{t-2}| / dt^2.
  // Non-positive values select the defaults a_max / (2 dt) and rate / dt.
  double rate_limit = 0.0;
  double second_diff_limit = 0.0;
  CostShape cost_shape = CostShape::kIndicator;
  std::array<double, 2> target_range{2.0, 1.0};  // |v_target,x| <= 2, |v_target,y| <= 1
  double effort_weight = 1e-4;
  double discount = 0.99;
  std::vector<double> thresholds = std::vector<double>(kPointMassConstraintCount, 0.0);
  std::vector<int> cost_group_map{0, 0, 1, 1, 1};
  bool scale_observation = true;

  double effective_rate_limit() const;
  double effective_second_diff_limit() const;
  CmdpSpec spec() const;
};

struct PointMassState {
  std::array<double, 2> position{};
  std::array<double, 2> velocity{};
  std::array<double, 2> target{};
  std::array<double, 2> prev_action{};
  std::array<double, 2> prev_prev_action{};
  int step = 0;
};

inline constexpr int kPointMassObservationDim = 10;

// [x, v, v_target, a_{t-1}, a_{t-2}], each pair divided by position_bound,
// v_max, v_max, a_max and a_max when cfg.scale_observation is set.
std::vector<double> pointmass_observation(const PointMassState& s, const PointMassConfig& cfg);

// Zero position and velocity, target drawn uniformly from the command box.
PointMassState pointmass_initial_state(Rng& rng, const PointMassConfig& cfg);

struct PointMassTransition {
  PointMassState state;
  StepResult result;
};

// Double integrator x += v dt, v += a dt. Pure function of (state, action).
// Excess and relu-shaped costs are measured as fractions of each limit.
// Throws NumericError for a non-finite state or action and ShapeError for a
// wrong action dimension.
PointMassTransition pointmass_step(const PointMassState& state, std::span<const double> action,
                                   const PointMassConfig& cfg);

class PointMassEnv final : public Env {
 public:
  explicit PointMassEnv(PointMassConfig cfg);

  const CmdpSpec& spec() const override { return spec_; }
  std::vector<double> reset(std::uint64_t seed) override;
  std::vector<double> reset() override;
  StepResult step(std::span<const double> action) override;

  const PointMassState& state() const { return state_; }
  const PointMassConfig& config() const { return cfg_; }

 private:
  PointMassConfig cfg_;
  CmdpSpec spec_;
  Rng rng_;
  PointMassState state_;
};

}  // namespace cmdp
