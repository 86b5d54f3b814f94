#include "cmdp/envs/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "cmdp/error.hpp"

namespace cmdp {
namespace {

int sample_categorical(std::span<const double> probs, Rng& rng) {
  const double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  // Rounding left u above the final partial sum: take the last positive entry.
  for (std::size_t i = probs.size(); i-- > 0;) {
    if (probs[i] > 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

void check_distribution(std::span<const double> p, const std::string& what) {
  double total = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw std::invalid_argument(what + " has a negative or NaN entry");
    total += v;
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument(what + " does not sum to 1");
}

}  // namespace

void TabularCmdp::validate() const {
  if (n_states <= 0 || n_actions <= 0) throw std::invalid_argument("empty tabular CMDP");
  const auto n = static_cast<std::size_t>(n_states) * static_cast<std::size_t>(n_actions) *
                 static_cast<std::size_t>(n_states);
  if (transition.size() != n || reward.size() != n) throw std::invalid_argument("table size mismatch");
  for (const auto& c : cost) {
    if (c.size() != n) throw std::invalid_argument("cost table size mismatch");
  }
  if (initial_dist.size() != static_cast<std::size_t>(n_states)) {
    throw std::invalid_argument("initial distribution size mismatch");
  }
  check_distribution(initial_dist, "initial distribution");
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      check_distribution(std::span<const double>(&transition[index(s, a, 0)],
                                                 static_cast<std::size_t>(n_states)),
                         "transition row");
    }
  }
}

void TabularPolicy::validate() const {
  if (probs.size() != static_cast<std::size_t>(n_states) * static_cast<std::size_t>(n_actions)) {
    throw std::invalid_argument("policy table size mismatch");
  }
  for (int s = 0; s < n_states; ++s) {
    check_distribution(std::span<const double>(&probs[static_cast<std::size_t>(s * n_actions)],
                                               static_cast<std::size_t>(n_actions)),
                       "policy row");
  }
}

TabularPolicy TabularPolicy::constant(int n_states, std::span<const double> action_probs) {
  TabularPolicy p;
  p.n_states = n_states;
  p.n_actions = static_cast<int>(action_probs.size());
  for (int s = 0; s < n_states; ++s) p.probs.insert(p.probs.end(), action_probs.begin(), action_probs.end());
  p.validate();
  return p;
}

TabularTransition tabular_step(const TabularCmdp& cmdp, int state, int action, Rng& rng) {
  if (state < 0 || state >= cmdp.n_states) throw std::out_of_range("state index out of range");
  if (action < 0 || action >= cmdp.n_actions) throw std::out_of_range("action index out of range");
  TabularTransition t;
  t.next_state = sample_categorical(
      std::span<const double>(&cmdp.transition[cmdp.index(state, action, 0)],
                              static_cast<std::size_t>(cmdp.n_states)),
      rng);
  const auto idx = cmdp.index(state, action, t.next_state);
  t.reward = cmdp.reward[idx];
  t.costs.reserve(cmdp.cost.size());
  for (const auto& c : cmdp.cost) t.costs.push_back(c[idx]);
  return t;
}

int sample_initial_state(const TabularCmdp& cmdp, Rng& rng) {
  return sample_categorical(cmdp.initial_dist, rng);
}

TabularCmdp make_chain_cmdp(int n_states, double slip) {
  if (n_states < 3) throw std::invalid_argument("chain CMDP needs at least 3 states");
  if (!(slip >= 0.0 && slip <= 0.5)) throw std::invalid_argument("slip must lie in [0, 0.5]");
  TabularCmdp m;
  m.n_states = n_states;
  m.n_actions = 2;
  const auto n = static_cast<std::size_t>(n_states) * 2 * static_cast<std::size_t>(n_states);
  m.transition.assign(n, 0.0);
  m.reward.assign(n, 0.0);
  m.cost.assign(2, std::vector<double>(n, 0.0));
  m.initial_dist.assign(static_cast<std::size_t>(n_states), 0.0);
  m.initial_dist[0] = 1.0;

  const int last = n_states - 1;
  for (int s = 0; s < n_states; ++s) {
    m.transition[m.index(s, kChainStay, s)] = 1.0;
    if (s == last) {
      m.transition[m.index(s, kChainAdvance, s)] = 1.0;
    } else {
      m.transition[m.index(s, kChainAdvance, s + 1)] = 1.0 - slip;
      m.transition[m.index(s, kChainAdvance, s)] += slip;
    }
    const bool left_half = 2 * s < n_states;
    for (int a = 0; a < 2; ++a) {
      for (int s2 = 0; s2 < n_states; ++s2) {
        const auto idx = m.index(s, a, s2);
        if (s == last) m.reward[idx] = 1.0;
        if (a == kChainAdvance && left_half) m.cost[0][idx] = 1.0;
        if (a == kChainAdvance && s != last && s2 == s) m.cost[1][idx] = 1.0;
      }
    }
  }
  m.validate();
  return m;
}

TabularEnv::TabularEnv(TabularCmdp cmdp, double discount, int episode_length,
                       std::vector<double> thresholds, std::vector<int> cost_group_map)
    : cmdp_(std::move(cmdp)) {
  cmdp_.validate();
  spec_.observation_dim = cmdp_.n_states;
  spec_.action_dim = 1;
  for (int i = 0; i < cmdp_.n_constraints(); ++i) spec_.constraint_names.push_back("cost" + std::to_string(i));
  spec_.thresholds = thresholds.empty()
                         ? std::vector<double>(static_cast<std::size_t>(cmdp_.n_constraints()), 0.0)
                         : std::move(thresholds);
  if (cost_group_map.empty()) {
    for (int i = 0; i < cmdp_.n_constraints(); ++i) spec_.cost_group_map.push_back(i);
  } else {
    spec_.cost_group_map = std::move(cost_group_map);
  }
  spec_.discount = discount;
  spec_.episode_length = episode_length;
  spec_.validate();
}

std::vector<double> TabularEnv::reset(std::uint64_t seed) {
  rng_.seed(seed);
  return reset();
}

std::vector<double> TabularEnv::reset() {
  state_ = sample_initial_state(cmdp_, rng_);
  steps_ = 0;
  return observation(state_);
}

int TabularEnv::action_index(double a) const {
  if (!std::isfinite(a)) throw NumericError("non-finite tabular action");
  const double idx = std::floor(a + 0.5 * static_cast<double>(cmdp_.n_actions));
  return static_cast<int>(std::clamp(idx, 0.0, static_cast<double>(cmdp_.n_actions - 1)));
}

double TabularEnv::action_value(int index) const {
  return static_cast<double>(index) - 0.5 * static_cast<double>(cmdp_.n_actions) + 0.5;
}

std::vector<double> TabularEnv::observation(int s) const {
  std::vector<double> obs(static_cast<std::size_t>(cmdp_.n_states), 0.0);
  obs[static_cast<std::size_t>(s)] = 1.0;
  return obs;
}

StepResult TabularEnv::step(std::span<const double> action) {
  if (action.size() != 1) throw ShapeError("tabular env expects a 1-d action");
  const auto t = tabular_step(cmdp_, state_, action_index(action[0]), rng_);
  state_ = t.next_state;
  ++steps_;
  StepResult r;
  r.reward = t.reward;
  r.costs = t.costs;
  r.excess = t.costs;
  r.violated.reserve(t.costs.size());
  for (double c : t.costs) r.violated.push_back(c > 0.0 ? 1 : 0);
  r.terminated = false;
  r.truncated = steps_ >= spec_.episode_length;
  r.next_observation = observation(state_);
  return r;
}

}  // namespace cmdp
