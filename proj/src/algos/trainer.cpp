#include "cmdp/algos/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "cmdp/error.hpp"
#include "cmdp/rng.hpp"
#include "cmdp/rollout/estimates.hpp"

namespace cmdp {
namespace {

constexpr std::uint64_t kStreamCollect = 1;
constexpr std::uint64_t kStreamShuffle = 2;
constexpr std::uint64_t kStreamInit = 3;
constexpr std::uint64_t kStreamEnvPool = 4;
constexpr std::uint64_t kStreamEval = 5;

std::vector<std::unique_ptr<Env>> make_envs(const EnvFactory& factory, int n) {
  if (n <= 0) throw std::invalid_argument("n_envs must be positive");
  std::vector<std::unique_ptr<Env>> envs;
  for (int i = 0; i < n; ++i) envs.push_back(factory());
  return envs;
}

CmdpSpec probe_spec(const EnvFactory& factory) {
  if (!factory) throw std::invalid_argument("Trainer needs an environment factory");
  auto env = factory();
  env->spec().validate();
  return env->spec();
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double population_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

// Undiscounted reward of every episode that starts and ends inside the batch.
std::vector<double> completed_episode_rewards(const RolloutBatch& b) {
  std::vector<double> out;
  for (int e = 0; e < b.envs; ++e) {
    bool open = false;
    double total = 0.0;
    for (int t = 0; t < b.steps; ++t) {
      const std::size_t r = b.row(t, e);
      if (b.episode_start[r]) {
        open = true;
        total = 0.0;
      }
      if (!open) continue;
      total += b.rewards[r];
      if (b.episode_end(r)) {
        out.push_back(total);
        open = false;
      }
    }
  }
  return out;
}

double min_cost_column(const Matrix& values) {
  double m = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 1; c < values.cols(); ++c) m = std::min(m, values.col(c).minCoeff());
  return m;
}

void negate(ParamVector& p) {
  for (double& v : p.values()) v = -v;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

Trainer::Trainer(TrainerSettings settings, EnvFactory factory)
    : settings_(std::move(settings)),
      factory_(std::move(factory)),
      spec_(probe_spec(factory_)),
      model_(spec_.observation_dim, spec_.action_dim, spec_.n_groups(), settings_.model,
             derive_seed(settings_.seed, kStreamInit)),
      pool_(make_envs(factory_, settings_.n_envs), derive_seed(settings_.seed, kStreamEnvPool)),
      collect_rng_(derive_seed(settings_.seed, kStreamCollect)),
      shuffle_rng_(derive_seed(settings_.seed, kStreamShuffle)),
      policy_opt_(AdamState::zeros_for(model_.policy_params())),
      lagrange_(LagrangeState::init(spec_.n_groups(), settings_.algo)),
      nu_(static_cast<std::size_t>(spec_.n_groups()), settings_.algo.nu_init),
      min_cost_value_(std::numeric_limits<double>::infinity()) {
  settings_.algo.validate();
  if (settings_.steps_per_env <= 0) throw std::invalid_argument("steps_per_env must be positive");
  if (settings_.eval_episodes < 0) throw std::invalid_argument("eval_episodes must be non-negative");
  const auto n = static_cast<std::size_t>(settings_.n_envs) * static_cast<std::size_t>(settings_.steps_per_env);
  if (n < static_cast<std::size_t>(2 * settings_.algo.minibatches)) {
    throw std::invalid_argument("batch too small for the requested number of minibatches");
  }
  for (int h = 0; h < model_.n_critics(); ++h) critic_opt_.push_back(AdamState::zeros_for(model_.critic_params(h)));
}

std::vector<double> Trainer::kappas() const {
  std::vector<double> k;
  for (int g = 0; g < spec_.n_groups(); ++g) {
    k.push_back(settings_.algo.kappa_schedule.enabled ? kappa_schedule(iteration_, settings_.algo.kappa_schedule)
                                                      : settings_.algo.kappa_for(g));
  }
  return k;
}

MetricsRecord Trainer::train_iteration() {
  const AlgorithmConfig& cfg = settings_.algo;
  const int G = spec_.n_groups();
  MetricsRecord rec;
  rec.iteration = iteration_;
  try {
    const auto t_collect = std::chrono::steady_clock::now();
    RolloutBatch batch = collect(pool_, model_, settings_.steps_per_env, collect_rng_);
    rec.t_collect_s = seconds_since(t_collect);

    const auto t_update = std::chrono::steady_clock::now();
    compute_advantages(batch, cfg.gamma, cfg.gae_lambda);
    min_cost_value_ = std::min(min_cost_value_, min_cost_column(batch.values));

    for (std::size_t c = 0; c < batch.norm_stats.size(); ++c) {
      if (batch.norm_stats[c].degenerate) {
        if (c > 0) ++rec.degenerate_groups;
        continue;
      }
      const auto col = batch.normalized_advantages.col(static_cast<Eigen::Index>(c));
      const double m = col.mean();
      const double s = std::sqrt((col.array() - m).square().mean());
      rec.norm_max_mean_error = std::max(rec.norm_max_mean_error, std::abs(m));
      rec.norm_max_std_error = std::max(rec.norm_max_std_error, std::abs(s - 1.0));
    }

    ConstraintContext ctx;
    ctx.gamma = cfg.gamma;
    ctx.threshold = spec_.group_thresholds();
    for (int g = 0; g < G; ++g) {
      double jc = 0.0;
      try {
        jc = estimate_cost_return(batch, g, cfg.gamma).value;
      } catch (const std::invalid_argument&) {
        jc = batch.values.col(1 + g).mean();
      }
      ctx.cost_return.push_back(jc);
      ctx.stats.push_back(batch.norm_stats[static_cast<std::size_t>(1 + g)]);
    }

    DualValues duals;
    duals.kappa = kappas();
    duals.lambda = lagrange_.effective();
    duals.nu = nu_;
    duals.entropy_coef = entropy_coef(iteration_, cfg);

    rec.violation_terms.assign(static_cast<std::size_t>(G), 0.0);
    int policy_steps = 0;
    std::vector<std::size_t> order(batch.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t per = order.size() / static_cast<std::size_t>(cfg.minibatches);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), shuffle_rng_);
      for (int m = 0; m < cfg.minibatches; ++m) {
        const std::size_t begin = static_cast<std::size_t>(m) * per;
        const std::size_t end = m + 1 == cfg.minibatches ? order.size() : begin + per;
        const Minibatch mb = make_minibatch(batch, std::span(order).subspan(begin, end - begin));

        {
          Tape tape;
          const ObjectiveTerms terms =
              policy_objective(tape, model_, model_.policy_params(), mb, ctx, duals, cfg);
          ParamVector g = grad(tape, terms.objective, model_.policy_params());
          negate(g);
          if (cfg.max_grad_norm > 0.0) clip_grad_norm(g, cfg.max_grad_norm);
          adam_step(model_.policy_params(), policy_opt_, g, cfg.learning_rate);
          rec.recovery_steps += terms.recovery_groups;
          rec.barrier_steps += terms.barrier_groups;
          rec.clamped_ratios += terms.clamped_ratios;
          if (terms.crpo_group >= 0) ++rec.crpo_constraint_steps;
          for (std::size_t g = 0; g < terms.violation.size(); ++g) rec.violation_terms[g] += terms.violation[g];
          ++policy_steps;
        }

        for (int h = 0; h < model_.n_critics(); ++h) {
          Tape tape;
          Var loss = critic_loss(tape, model_, h, model_.critic_params(h), mb);
          ParamVector g = grad(tape, loss, model_.critic_params(h));
          if (cfg.max_grad_norm > 0.0) clip_grad_norm(g, cfg.max_grad_norm);
          adam_step(model_.critic_params(h), critic_opt_[static_cast<std::size_t>(h)], g,
                    cfg.critic_learning_rate);
        }
      }
    }

    for (double& v : rec.violation_terms) v /= std::max(policy_steps, 1);

    if (cfg.algorithm == Algorithm::kPpoLagrangian) {
      lagrange_update(lagrange_, ctx.cost_return, ctx.threshold, cfg);
    }
    if (cfg.algorithm == Algorithm::kFocops) {
      for (int g = 0; g < G; ++g) {
        const auto i = static_cast<std::size_t>(g);
        nu_[i] = focops_nu_update(nu_[i], ctx.threshold[i], ctx.cost_return[i], cfg);
      }
    }
    rec.t_update_s = seconds_since(t_update);

    rec.cost_returns = ctx.cost_return;
    rec.kappa = mean_of(duals.kappa);
    rec.lambda_eff = mean_of(duals.lambda);
    rec.nu = mean_of(duals.nu);
    rec.entropy_coef = duals.entropy_coef;

    if (settings_.eval_episodes > 0) {
      const EvalSummary ev = evaluate(settings_.eval_episodes);
      rec.ep_reward_mean = ev.reward_mean;
      rec.ep_reward_std = ev.reward_std;
      rec.violations_total = ev.violations_total;
      rec.violations = ev.violations;
      rec.mean_excess = ev.mean_excess;
      rec.mean_deviation = ev.mean_deviation;
      min_cost_value_ = std::min(min_cost_value_, ev.min_cost_value);
    } else {
      const auto rewards = completed_episode_rewards(batch);
      rec.ep_reward_mean = mean_of(rewards);
      rec.ep_reward_std = population_std(rewards);
      rec.violations.assign(static_cast<std::size_t>(spec_.n_constraints()), 0.0);
      if (!rewards.empty()) {
        const ViolationCounts vc = violations_per_episode(batch);
        rec.violations = vc.per_constraint;
        rec.violations_total = vc.total;
      }
      double excess = 0.0;
      for (Eigen::Index r = 0; r < batch.excess.rows(); ++r) excess += batch.excess.row(r).sum();
      rec.mean_excess = excess / static_cast<double>(batch.size());
      const auto events = static_cast<double>(std::count(batch.violated.begin(), batch.violated.end(), 1));
      rec.mean_deviation = events > 0.0 ? excess / events : 0.0;
    }
    rec.min_cost_value = min_cost_value_;
    if (!settings_.wall_clock) {
      rec.t_update_s = 0.0;
      rec.t_collect_s = 0.0;
    }
  } catch (const NumericError& e) {
    last_diagnostics_ = {{"iteration", iteration_},
                         {"error", e.what()},
                         {"policy_params_finite", model_.policy_params().all_finite()}};
    throw NumericError("iteration " + std::to_string(iteration_) + ": " + e.what());
  }
  ++iteration_;
  return rec;
}

EvalSummary Trainer::evaluate(int episodes) const {
  if (episodes <= 0) throw std::invalid_argument("evaluate needs a positive episode count");
  const std::uint64_t base = derive_seed(settings_.seed, kStreamEval);
  const int nc = spec_.n_constraints();
  const int obs_dim = spec_.observation_dim;

  std::vector<std::unique_ptr<Env>> envs;
  std::vector<std::vector<double>> obs;
  for (int k = 0; k < episodes; ++k) {
    envs.push_back(factory_());
    obs.push_back(envs.back()->reset(derive_seed(base, static_cast<std::uint64_t>(k))));
  }
  std::vector<double> reward(static_cast<std::size_t>(episodes), 0.0);
  std::vector<double> per(static_cast<std::size_t>(nc), 0.0);
  double excess = 0.0;
  double events = 0.0;
  std::int64_t steps = 0;
  double min_cost = std::numeric_limits<double>::infinity();
  std::vector<std::uint8_t> active(static_cast<std::size_t>(episodes), 1);

  for (;;) {
    std::vector<int> live;
    for (int k = 0; k < episodes; ++k) {
      if (active[static_cast<std::size_t>(k)]) live.push_back(k);
    }
    if (live.empty()) break;
    Matrix o(static_cast<Eigen::Index>(live.size()), obs_dim);
    for (std::size_t i = 0; i < live.size(); ++i) {
      const auto& v = obs[static_cast<std::size_t>(live[i])];
      for (int d = 0; d < obs_dim; ++d) o(static_cast<Eigen::Index>(i), d) = v[static_cast<std::size_t>(d)];
    }
    const Matrix act = model_.mean_action(o);
    min_cost = std::min(min_cost, min_cost_column(model_.values(o)));
    for (std::size_t i = 0; i < live.size(); ++i) {
      const auto k = static_cast<std::size_t>(live[i]);
      const auto row = act.row(static_cast<Eigen::Index>(i));
      const std::vector<double> a(row.data(), row.data() + row.size());
      StepResult sr = envs[k]->step(a);
      reward[k] += sr.reward;
      for (int c = 0; c < nc; ++c) {
        if (sr.violated[static_cast<std::size_t>(c)]) {
          per[static_cast<std::size_t>(c)] += 1.0;
          events += 1.0;
        }
        excess += sr.excess[static_cast<std::size_t>(c)];
      }
      ++steps;
      obs[k] = std::move(sr.next_observation);
      if (sr.terminated || sr.truncated) active[k] = 0;
    }
  }

  EvalSummary s;
  s.episodes = episodes;
  s.reward_mean = mean_of(reward);
  s.reward_std = population_std(reward);
  for (double& v : per) v /= episodes;
  s.violations = per;
  for (double v : per) s.violations_total += v;
  s.mean_excess = steps > 0 ? excess / static_cast<double>(steps) : 0.0;
  s.mean_deviation = events > 0.0 ? excess / events : 0.0;
  s.min_cost_value = min_cost;
  return s;
}

nlohmann::json Trainer::snapshot() const {
  nlohmann::json j;
  j["iteration"] = iteration_;
  j["algorithm"] = std::string(to_string(settings_.algo.algorithm));
  j["seed"] = settings_.seed;
  j["lambda_effective"] = lagrange_.effective();
  j["nu"] = nu_;
  j["policy_params_finite"] = model_.policy_params().all_finite();
  std::vector<bool> critics;
  for (int h = 0; h < model_.n_critics(); ++h) critics.push_back(model_.critic_params(h).all_finite());
  j["critic_params_finite"] = critics;
  j["failure"] = last_diagnostics_;
  return j;
}

}  // namespace cmdp
