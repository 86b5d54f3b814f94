#include "cmdp/harness/run.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

#include "cmdp/algos/losses.hpp"
#include "cmdp/diffcore/checkpoint.hpp"
#include "cmdp/error.hpp"

namespace cmdp::harness {
namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << text;
}

nlohmann::json eval_json(const EvalSummary& e) {
  return {{"episodes", e.episodes},
          {"reward_mean", e.reward_mean},
          {"reward_std", e.reward_std},
          {"violations_total", e.violations_total},
          {"violations", e.violations},
          {"mean_excess", e.mean_excess},
          {"mean_deviation", e.mean_deviation},
          {"min_cost_value", e.min_cost_value}};
}

void checkpoint(const Trainer& trainer, const ExperimentConfig& cfg, const std::filesystem::path& base) {
  save_checkpoint(base, trainer.model().pack(),
                  {{"config", to_ini(cfg.tree)}, {"iteration", trainer.iteration()}});
}

}  // namespace

std::string metrics_header(int n_constraints, int n_groups) {
  std::string h = "iteration,ep_reward_mean,ep_reward_std,violations_total";
  for (int i = 0; i < n_constraints; ++i) h += ",violations_c" + std::to_string(i);
  for (int g = 0; g < n_groups; ++g) h += ",jc_" + std::to_string(g);
  h += ",kappa,lambda_eff,nu,entropy_coef,t_update_s,t_collect_s";
  return h;
}

std::string metrics_row(const MetricsRecord& r) {
  std::string s = std::to_string(r.iteration) + "," + fmt(r.ep_reward_mean) + "," + fmt(r.ep_reward_std) + "," +
                  fmt(r.violations_total);
  for (double v : r.violations) s += "," + fmt(v);
  for (double v : r.cost_returns) s += "," + fmt(v);
  s += "," + fmt(r.kappa) + "," + fmt(r.lambda_eff) + "," + fmt(r.nu) + "," + fmt(r.entropy_coef) + "," +
       fmt(r.t_update_s) + "," + fmt(r.t_collect_s);
  return s;
}

std::filesystem::path default_run_dir(const ExperimentConfig& cfg) {
  return std::filesystem::path(cfg.run.output_dir) /
         (cfg.display_label() + "_seed" + std::to_string(cfg.run.seed));
}

nlohmann::json summarize(const std::vector<MetricsRecord>& records, const EvalSummary& final_eval,
                         const ExperimentConfig& cfg, double min_cost_value) {
  nlohmann::json j;
  j["algorithm"] = std::string(to_string(cfg.algo.algorithm));
  j["label"] = cfg.display_label();
  j["seed"] = cfg.run.seed;
  j["iterations"] = records.size();

  const std::size_t n = std::min<std::size_t>(records.size(), kSummaryWindow);
  std::vector<double> reward, viol, t_update, t_collect;
  double deviation_weighted = 0.0;
  std::vector<std::vector<double>> per;
  for (std::size_t i = records.size() - n; i < records.size(); ++i) {
    const MetricsRecord& r = records[i];
    reward.push_back(r.ep_reward_mean);
    viol.push_back(r.violations_total);
    t_update.push_back(r.t_update_s);
    t_collect.push_back(r.t_collect_s);
    deviation_weighted += r.mean_deviation * r.violations_total;
    per.resize(r.violations.size());
    for (std::size_t c = 0; c < r.violations.size(); ++c) per[c].push_back(r.violations[c]);
  }
  nlohmann::json fin;
  fin["window"] = n;
  if (n == 0) {
    fin["reward_mean"] = final_eval.reward_mean;
    fin["reward_std"] = final_eval.reward_std;
    fin["violations_mean"] = final_eval.violations_total;
    fin["violations_std"] = 0.0;
    fin["violations_per_constraint"] = final_eval.violations;
    fin["deviation_mean"] = final_eval.mean_deviation;
  } else {
    fin["reward_mean"] = mean(reward);
    fin["reward_std"] = sample_std(reward);
    fin["violations_mean"] = mean(viol);
    fin["violations_std"] = sample_std(viol);
    std::vector<double> pc;
    for (const auto& v : per) pc.push_back(mean(v));
    fin["violations_per_constraint"] = pc;
    // Violation events per episode weight each iteration's deviation.
    const double events = mean(viol) * static_cast<double>(n);
    fin["deviation_mean"] = events > 0.0 ? deviation_weighted / events : 0.0;
    fin["t_update_mean"] = mean(t_update);
    fin["t_collect_mean"] = mean(t_collect);
  }
  j["final"] = fin;
  j["final_eval"] = eval_json(final_eval);
  j["min_cost_value"] = std::isfinite(min_cost_value) ? min_cost_value : 0.0;
  int recovery = 0, barrier = 0, clamped = 0, crpo = 0;
  double norm_mean = 0.0, norm_std = 0.0;
  for (const auto& r : records) {
    recovery += r.recovery_steps;
    barrier += r.barrier_steps;
    clamped += r.clamped_ratios;
    crpo += r.crpo_constraint_steps;
    norm_mean = std::max(norm_mean, r.norm_max_mean_error);
    norm_std = std::max(norm_std, r.norm_max_std_error);
  }
  j["diagnostics"] = {{"recovery_steps", recovery},
                      {"barrier_steps", barrier},
                      {"clamped_ratios", clamped},
                      {"crpo_constraint_steps", crpo},
                      {"norm_max_mean_error", norm_mean},
                      {"norm_max_std_error", norm_std}};
  return j;
}

RunResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& dir, std::ostream* log) {
  std::filesystem::create_directories(dir);
  write_text(dir / "config.copy", to_ini(cfg.tree));

  Trainer trainer(cfg.trainer_settings(), cfg.env_factory());
  const CmdpSpec& spec = trainer.spec();
  RunResult result;
  result.dir = dir;

  std::ofstream csv(dir / "metrics.csv", std::ios::binary);
  if (!csv) throw std::runtime_error("cannot write metrics.csv in " + dir.string());
  csv << metrics_header(spec.n_constraints(), spec.n_groups()) << "\n";

  try {
    for (std::int64_t i = 0; i < cfg.run.iterations; ++i) {
      MetricsRecord r = trainer.train_iteration();
      csv << metrics_row(r) << "\n";
      csv.flush();
      if (log != nullptr) {
        *log << "iter " << r.iteration << " reward " << fmt(r.ep_reward_mean) << " violations "
             << fmt(r.violations_total) << "\n";
      }
      result.records.push_back(std::move(r));
      if (cfg.run.checkpoint_every > 0 && (i + 1) % cfg.run.checkpoint_every == 0) {
        checkpoint(trainer, cfg, dir / ("checkpoint_" + std::to_string(i + 1)));
      }
    }
  } catch (const NumericError& e) {
    nlohmann::json snap = trainer.snapshot();
    snap["message"] = e.what();
    write_text(dir / "snapshot.json", snap.dump(2) + "\n");
    throw;
  }

  checkpoint(trainer, cfg, dir / "checkpoint_final");
  const EvalSummary final_eval = trainer.evaluate(std::max(cfg.run.eval_episodes, kSummaryWindow));
  result.summary = summarize(result.records, final_eval, cfg,
                             std::min(trainer.min_cost_value(), final_eval.min_cost_value));
  write_text(dir / "summary.json", result.summary.dump(2) + "\n");
  return result;
}

EvalSummary evaluate_checkpoint(const std::filesystem::path& path, int episodes) {
  const LoadedCheckpoint ck = load_checkpoint(path);
  if (!ck.meta.contains("config")) throw ConfigError("checkpoint", "sidecar lacks the run configuration");
  const ExperimentConfig cfg = parse_config_text(ck.meta["config"].get<std::string>(), path.string());
  TrainerSettings settings = cfg.trainer_settings();
  settings.n_envs = 1;
  Trainer trainer(settings, cfg.env_factory());
  try {
    trainer.model().unpack(ck.params);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("checkpoint", e.what());
  }
  return trainer.evaluate(episodes);
}

}  // namespace cmdp::harness
