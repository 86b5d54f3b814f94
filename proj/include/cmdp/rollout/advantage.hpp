#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace cmdp {

// sum_t gamma^t seq_t
double discounted_return(std::span<const double> seq, double gamma);

// Generalized advantage estimation over one environment's time series.
//   delta_t = signal_t + gamma * next_values_t * (1 - terminated_t) - values_t
//   A_t     = delta_t + gamma * lambda * (1 - episode_end_t) * A_{t+1}
// next_values_t is V(s_{t+1}) before any auto-reset; it must be finite
// wherever it is used (truncations, the tail of the series, and interior
// steps), otherwise std::invalid_argument is thrown.
// episode_end_t is terminated_t || truncated_t.
std::vector<double> gae(std::span<const double> values, std::span<const double> next_values,
                        std::span<const double> signal, double gamma, double lambda,
                        std::span<const std::uint8_t> terminated,
                        std::span<const std::uint8_t> episode_end);

inline constexpr double kStdFloor = 1e-8;

struct NormalizedAdvantages {
  std::vector<double> values;
  double mean = 0.0;
  double std = 1.0;  // population std, floored at kStdFloor
  bool degenerate = false;
};

// (adv - mean) / std. A batch whose std falls below the floor is flagged
// degenerate and maps to all zeros. Needs at least two entries.
NormalizedAdvantages normalize_advantages(std::span<const double> adv);

}  // namespace cmdp
