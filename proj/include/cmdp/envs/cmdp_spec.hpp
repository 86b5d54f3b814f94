#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cmdp {

struct CmdpSpec {
  int observation_dim = 0;
  int action_dim = 0;
  std::vector<std::string> constraint_names;
  std::vector<double> thresholds;  // epsilon_i, one per constraint
  double discount = 0.99;
  int episode_length = 200;
  // constraint index -> cost-critic group index; groups are 0..n_groups-1.
  std::vector<int> cost_group_map;

  int n_constraints() const { return static_cast<int>(thresholds.size()); }
  int n_groups() const;
  // Sum of member thresholds for each group.
  std::vector<double> group_thresholds() const;
  // Throws std::invalid_argument when an invariant is broken.
  void validate() const;
};

struct StepResult {
  std::vector<double> next_observation;
  double reward = 0.0;
  std::vector<double> costs;
  std::vector<std::uint8_t> violated;
  // Summed per-dimension excess beyond each limit (0 when satisfied), in
  // units chosen by the environment.
  std::vector<double> excess;
  bool terminated = false;
  bool truncated = false;
};

enum class CostShape { kIndicator, kCount, kRelu, kReluSquared };

CostShape parse_cost_shape(std::string_view name);
std::string_view to_string(CostShape shape);

// Maps per-dimension violation magnitudes (>= 0) to a scalar cost.
double cost_shape_eval(std::span<const double> excess, CostShape shape);

// Episodic environment with vector actions. Instances carry their own RNG;
// reset(seed) reseeds, reset() continues the current stream.
class Env {
 public:
  virtual ~Env() = default;
  virtual const CmdpSpec& spec() const = 0;
  virtual std::vector<double> reset(std::uint64_t seed) = 0;
  virtual std::vector<double> reset() = 0;
  virtual StepResult step(std::span<const double> action) = 0;
};

}  // namespace cmdp
