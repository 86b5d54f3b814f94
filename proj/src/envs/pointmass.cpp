#include "cmdp/envs/pointmass.hpp"

#include <algorithm>
#include <cmath>

#include "cmdp/error.hpp"

namespace cmdp {
namespace {

double relative_excess(double value, double limit) { return std::max(0.0, value - limit) / limit; }

}  // namespace

double PointMassConfig::effective_rate_limit() const {
  return rate_limit > 0.0 ? rate_limit : a_max / (2.0 * dt);
}

double PointMassConfig::effective_second_diff_limit() const {
  return second_diff_limit > 0.0 ? second_diff_limit : effective_rate_limit() / dt;
}

CmdpSpec PointMassConfig::spec() const {
  CmdpSpec s;
  s.observation_dim = kPointMassObservationDim;
  s.action_dim = 2;
  s.constraint_names = {"command_rate", "command_jerk", "speed", "actuation", "position"};
  s.thresholds = thresholds;
  s.discount = discount;
  s.episode_length = episode_length;
  s.cost_group_map = cost_group_map;
  s.validate();
  return s;
}

std::vector<double> pointmass_observation(const PointMassState& s, const PointMassConfig& cfg) {
  std::vector<double> o{s.position[0],    s.position[1],    s.velocity[0],         s.velocity[1],
                        s.target[0],      s.target[1],      s.prev_action[0],      s.prev_action[1],
                        s.prev_prev_action[0], s.prev_prev_action[1]};
  if (cfg.scale_observation) {
    const double scale[] = {cfg.position_bound, cfg.v_max, cfg.v_max, cfg.a_max, cfg.a_max};
    for (std::size_t i = 0; i < o.size(); ++i) o[i] /= scale[i / 2];
  }
  return o;
}

PointMassState pointmass_initial_state(Rng& rng, const PointMassConfig& cfg) {
  PointMassState s;
  for (int d = 0; d < 2; ++d) {
    s.target[static_cast<std::size_t>(d)] =
        cfg.target_range[static_cast<std::size_t>(d)] * (2.0 * uniform01(rng) - 1.0);
  }
  return s;
}

PointMassTransition pointmass_step(const PointMassState& state, std::span<const double> action,
                                   const PointMassConfig& cfg) {
  if (action.size() != 2) throw ShapeError("point-mass action must have 2 entries");
  if (!std::isfinite(action[0]) || !std::isfinite(action[1])) {
    throw NumericError("non-finite point-mass action");
  }
  for (int d = 0; d < 2; ++d) {
    const auto i = static_cast<std::size_t>(d);
    if (!std::isfinite(state.position[i]) || !std::isfinite(state.velocity[i]) ||
        !std::isfinite(state.target[i])) {
      throw NumericError("non-finite point-mass state");
    }
  }

  const double dt = cfg.dt;
  const double rate_lim = cfg.effective_rate_limit();
  const double jerk_lim = cfg.effective_second_diff_limit();

  PointMassTransition tr;
  PointMassState& next = tr.state;
  next = state;
  std::array<std::array<double, 2>, kPointMassConstraintCount> excess{};
  double effort = 0.0;
  double tracking_sq = 0.0;
  for (int d = 0; d < 2; ++d) {
    const auto i = static_cast<std::size_t>(d);
    const double a = action[i];
    const double rate = std::abs(a - state.prev_action[i]) / dt;
    const double jerk = std::abs(a - 2.0 * state.prev_action[i] + state.prev_prev_action[i]) / (dt * dt);
    next.position[i] = state.position[i] + state.velocity[i] * dt;
    next.velocity[i] = state.velocity[i] + a * dt;
    next.prev_prev_action[i] = state.prev_action[i];
    next.prev_action[i] = a;

    excess[kCommandRate][i] = relative_excess(rate, rate_lim);
    excess[kCommandJerk][i] = relative_excess(jerk, jerk_lim);
    excess[kSpeed][i] = relative_excess(std::abs(next.velocity[i]), cfg.v_max);
    excess[kActuation][i] = relative_excess(std::abs(a), cfg.a_max);
    excess[kPositionBox][i] = relative_excess(std::abs(next.position[i]), cfg.position_bound);

    effort += a * a;
    const double err = state.target[i] - next.velocity[i];
    tracking_sq += err * err;
  }
  next.step = state.step + 1;

  StepResult& r = tr.result;
  r.reward = std::exp(-2.0 * tracking_sq) - cfg.effort_weight * effort;
  r.costs.resize(kPointMassConstraintCount);
  r.violated.resize(kPointMassConstraintCount);
  r.excess.resize(kPointMassConstraintCount);
  for (std::size_t c = 0; c < kPointMassConstraintCount; ++c) {
    r.costs[c] = cost_shape_eval(excess[c], cfg.cost_shape);
    r.violated[c] = (excess[c][0] > 0.0 || excess[c][1] > 0.0) ? 1 : 0;
    r.excess[c] = excess[c][0] + excess[c][1];
  }
  r.terminated = false;
  r.truncated = next.step >= cfg.episode_length;
  r.next_observation = pointmass_observation(next, cfg);
  return tr;
}

PointMassEnv::PointMassEnv(PointMassConfig cfg) : cfg_(std::move(cfg)), spec_(cfg_.spec()) {}

std::vector<double> PointMassEnv::reset(std::uint64_t seed) {
  rng_.seed(seed);
  return reset();
}

std::vector<double> PointMassEnv::reset() {
  state_ = pointmass_initial_state(rng_, cfg_);
  return pointmass_observation(state_, cfg_);
}

StepResult PointMassEnv::step(std::span<const double> action) {
  auto tr = pointmass_step(state_, action, cfg_);
  state_ = tr.state;
  return std::move(tr.result);
}

}  // namespace cmdp
