#include "cmdp/algos/config.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace cmdp {

Algorithm parse_algorithm(std::string_view name) {
  for (Algorithm a : kAllAlgorithms) {
    if (to_string(a) == name) return a;
  }
  throw std::invalid_argument("unknown algorithm '" + std::string(name) + "'");
}

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::kPpo: return "ppo";
    case Algorithm::kP3o: return "p3o";
    case Algorithm::kNp3o: return "np3o";
    case Algorithm::kPpoLagrangian: return "ppo_lagrangian";
    case Algorithm::kNipo: return "nipo";
    case Algorithm::kCrpo: return "crpo";
    case Algorithm::kFocops: return "focops";
  }
  return "?";
}

DualOptimizer parse_dual_optimizer(std::string_view name) {
  if (name == "adam") return DualOptimizer::kAdam;
  if (name == "sgd") return DualOptimizer::kSgd;
  throw std::invalid_argument("unknown dual optimizer '" + std::string(name) + "'");
}

std::string_view to_string(DualOptimizer d) { return d == DualOptimizer::kAdam ? "adam" : "sgd"; }

double kappa_schedule(std::int64_t iteration, const KappaSchedule& s) {
  if (iteration < 0) throw std::invalid_argument("iteration must be >= 0");
  return std::min(s.cap, s.min0 * std::pow(s.growth, static_cast<double>(iteration)));
}

double entropy_coef(std::int64_t iteration, const AlgorithmConfig& cfg) {
  if (iteration < 0) throw std::invalid_argument("iteration must be >= 0");
  if (cfg.entropy_coef == 0.0) return 0.0;
  return cfg.entropy_coef * std::pow(cfg.entropy_decay, static_cast<double>(iteration));
}

double AlgorithmConfig::kappa_for(int group) const {
  if (kappa.size() == 1) return kappa.front();
  return kappa.at(static_cast<std::size_t>(group));
}

void AlgorithmConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& msg) {
    throw std::invalid_argument(field + ": " + msg);
  };
  if (!(clip > 0.0 && clip < 1.0)) fail("clip", "must lie in (0, 1)");
  if (!(gamma >= 0.0 && gamma < 1.0)) fail("gamma", "must lie in [0, 1)");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) fail("gae_lambda", "must lie in [0, 1]");
  if (epochs <= 0) fail("epochs", "must be positive");
  if (minibatches <= 0) fail("minibatches", "must be positive");
  if (!(learning_rate > 0.0)) fail("learning_rate", "must be positive");
  if (!(critic_learning_rate > 0.0)) fail("critic_learning_rate", "must be positive");
  if (!(max_grad_norm >= 0.0)) fail("max_grad_norm", "must be >= 0");
  if (kappa.empty()) fail("kappa", "needs at least one value");
  for (double k : kappa) {
    if (!(k >= 0.0)) fail("kappa", "must be >= 0");
  }
  if (kappa_schedule.enabled) {
    if (!(kappa_schedule.min0 > 0.0)) fail("kappa_min0", "must be positive");
    if (!(kappa_schedule.cap >= kappa_schedule.min0)) fail("kappa_cap", "must be >= kappa_min0");
    if (!(kappa_schedule.growth >= 1.0)) fail("kappa_growth", "must be >= 1");
  }
  if (!(lambda_lr >= 0.0)) fail("lambda_lr", "must be >= 0");
  if (!(barrier_k > 0.0)) fail("barrier_k", "must be positive");
  if (!(lambda_rec >= 0.0)) fail("lambda_rec", "must be >= 0");
  if (!(nu_max >= 0.0)) fail("nu_max", "must be >= 0");
  if (!(nu_init >= 0.0 && nu_init <= nu_max)) fail("nu_init", "must lie in [0, nu_max]");
  if (!(nu_lr >= 0.0)) fail("nu_lr", "must be >= 0");
  if (!(focops_temperature > 0.0)) fail("focops_temperature", "must be positive");
  if (!(entropy_coef >= 0.0)) fail("entropy_coef", "must be >= 0");
  if (!(entropy_decay > 0.0 && entropy_decay <= 1.0)) fail("entropy_decay", "must lie in (0, 1]");
}

}  // namespace cmdp
