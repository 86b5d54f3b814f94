#include "cmdp/rollout/advantage.hpp"

#include <cmath>
#include <stdexcept>

namespace cmdp {

double discounted_return(std::span<const double> seq, double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw std::invalid_argument("gamma must lie in [0, 1)");
  double total = 0.0;
  double w = 1.0;
  for (double x : seq) {
    total += w * x;
    w *= gamma;
  }
  return total;
}

std::vector<double> gae(std::span<const double> values, std::span<const double> next_values,
                        std::span<const double> signal, double gamma, double lambda,
                        std::span<const std::uint8_t> terminated,
                        std::span<const std::uint8_t> episode_end) {
  const std::size_t n = signal.size();
  if (values.size() != n || next_values.size() != n || terminated.size() != n ||
      episode_end.size() != n) {
    throw std::invalid_argument("gae: input lengths differ");
  }
  std::vector<double> adv(n, 0.0);
  double running = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const bool term = terminated[k] != 0;
    const bool end = episode_end[k] != 0 || term;
    double bootstrap = 0.0;
    if (!term) {
      bootstrap = next_values[k];
      if (!std::isfinite(bootstrap)) {
        throw std::invalid_argument("gae: missing bootstrap value at step " + std::to_string(k));
      }
    }
    const double delta = signal[k] + gamma * bootstrap - values[k];
    running = delta + (end ? 0.0 : gamma * lambda * running);
    adv[k] = running;
  }
  return adv;
}

NormalizedAdvantages normalize_advantages(std::span<const double> adv) {
  if (adv.size() < 2) throw std::invalid_argument("normalize_advantages needs at least 2 entries");
  NormalizedAdvantages out;
  const double n = static_cast<double>(adv.size());
  double mean = 0.0;
  for (double a : adv) mean += a;
  mean /= n;
  double var = 0.0;
  for (double a : adv) var += (a - mean) * (a - mean);
  const double sd = std::sqrt(var / n);
  out.mean = mean;
  out.values.assign(adv.size(), 0.0);
  if (!(sd >= kStdFloor)) {
    out.std = kStdFloor;
    out.degenerate = true;
    return out;
  }
  out.std = sd;
  for (std::size_t i = 0; i < adv.size(); ++i) out.values[i] = (adv[i] - mean) / sd;
  return out;
}

}  // namespace cmdp
