#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cmdp/diffcore/nn.hpp"

namespace cmdp {

// Declaration order is the reporting order used by comparison tables.
enum class Algorithm { kPpo, kP3o, kNp3o, kPpoLagrangian, kNipo, kCrpo, kFocops };

inline constexpr std::array<Algorithm, 7> kAllAlgorithms{
    Algorithm::kPpo,  Algorithm::kP3o,  Algorithm::kNp3o,  Algorithm::kPpoLagrangian,
    Algorithm::kNipo, Algorithm::kCrpo, Algorithm::kFocops};

Algorithm parse_algorithm(std::string_view name);
std::string_view to_string(Algorithm a);

enum class DualOptimizer { kAdam, kSgd };
DualOptimizer parse_dual_optimizer(std::string_view name);
std::string_view to_string(DualOptimizer d);

// kappa_i = min(cap, min0 * growth^i)
struct KappaSchedule {
  bool enabled = false;
  double min0 = 0.1;
  double growth = 1.0004;
  double cap = 0.2;
};

double kappa_schedule(std::int64_t iteration, const KappaSchedule& schedule);

struct AlgorithmConfig {
  Algorithm algorithm = Algorithm::kNp3o;
  double clip = 0.2;
  double gamma = 0.99;
  double gae_lambda = 0.95;
  int epochs = 4;
  int minibatches = 4;
  double learning_rate = 3e-4;
  double critic_learning_rate = 3e-4;
  double max_grad_norm = 0.0;  // 0 disables clipping

  // Penalty weights, one per cost group; a single entry is broadcast.
  std::vector<double> kappa{1.0};
  KappaSchedule kappa_schedule;

  // PPO-Lagrangian: raw (pre-softplus) multiplier and its learning rate.
  double lambda_init = 0.0;
  double lambda_lr = 0.001;
  DualOptimizer lambda_optimizer = DualOptimizer::kAdam;

  // N-IPO
  double barrier_k = 20.0;
  double lambda_rec = 1.0;

  // FOCOPS
  double nu_init = 0.1;
  double nu_max = 0.2;
  double nu_lr = 0.005;
  double focops_temperature = 0.5;

  double entropy_coef = 0.0;
  double entropy_decay = 1.0;

  // Throws std::invalid_argument naming the offending field.
  void validate() const;
  double kappa_for(int group) const;
};

// c_ent0 * decay^iteration
double entropy_coef(std::int64_t iteration, const AlgorithmConfig& cfg);

struct ModelConfig {
  std::vector<int> hidden{64, 64};
  Activation activation = Activation::kElu;
  OutputHead cost_head = OutputHead::kSoftplus;
  double log_std_init = 0.0;
};

}  // namespace cmdp
