#include "cmdp/envs/cmdp_spec.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cmdp {

int CmdpSpec::n_groups() const {
  if (cost_group_map.empty()) return 0;
  return *std::max_element(cost_group_map.begin(), cost_group_map.end()) + 1;
}

std::vector<double> CmdpSpec::group_thresholds() const {
  std::vector<double> out(static_cast<std::size_t>(n_groups()), 0.0);
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    out[static_cast<std::size_t>(cost_group_map[i])] += thresholds[i];
  }
  return out;
}

void CmdpSpec::validate() const {
  if (observation_dim <= 0 || action_dim <= 0) throw std::invalid_argument("dimensions must be positive");
  if (!(discount >= 0.0 && discount < 1.0)) throw std::invalid_argument("discount must lie in [0, 1)");
  if (episode_length <= 0) throw std::invalid_argument("episode_length must be positive");
  if (thresholds.empty()) throw std::invalid_argument("at least one constraint is required");
  if (constraint_names.size() != thresholds.size()) {
    throw std::invalid_argument("one name per constraint required");
  }
  for (double e : thresholds) {
    if (!(e >= 0.0) || !std::isfinite(e)) throw std::invalid_argument("thresholds must be finite and >= 0");
  }
  if (cost_group_map.size() != thresholds.size()) {
    throw std::invalid_argument("cost_group_map must map every constraint");
  }
  const int groups = n_groups();
  std::vector<bool> used(static_cast<std::size_t>(groups), false);
  for (int g : cost_group_map) {
    if (g < 0) throw std::invalid_argument("negative cost group index");
    used[static_cast<std::size_t>(g)] = true;
  }
  if (std::find(used.begin(), used.end(), false) != used.end()) {
    throw std::invalid_argument("cost groups must be numbered contiguously from 0");
  }
}

CostShape parse_cost_shape(std::string_view name) {
  if (name == "indicator") return CostShape::kIndicator;
  if (name == "count") return CostShape::kCount;
  if (name == "relu") return CostShape::kRelu;
  if (name == "relu_squared" || name == "relu2") return CostShape::kReluSquared;
  throw std::invalid_argument("unknown cost shape '" + std::string(name) + "'");
}

std::string_view to_string(CostShape shape) {
  switch (shape) {
    case CostShape::kIndicator: return "indicator";
    case CostShape::kCount: return "count";
    case CostShape::kRelu: return "relu";
    case CostShape::kReluSquared: return "relu_squared";
  }
  return "?";
}

double cost_shape_eval(std::span<const double> excess, CostShape shape) {
  double count = 0.0;
  double total = 0.0;
  double total_sq = 0.0;
  for (double e : excess) {
    if (!(e >= 0.0)) throw std::invalid_argument("cost excess entries must be >= 0");
    if (e > 0.0) count += 1.0;
    total += e;
    total_sq += e * e;
  }
  switch (shape) {
    case CostShape::kIndicator: return count > 0.0 ? 1.0 : 0.0;
    case CostShape::kCount: return count;
    case CostShape::kRelu: return total;
    case CostShape::kReluSquared: return total_sq;
  }
  return 0.0;
}

}  // namespace cmdp
