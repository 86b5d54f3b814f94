#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "cmdp/error.hpp"
#include "cmdp/harness/compare.hpp"
#include "cmdp/harness/config.hpp"
#include "cmdp/harness/run.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

int cmd_train(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& out, bool quiet) {
  using namespace cmdp::harness;
  ExperimentConfig cfg = load_config(config_path);
  if (seed) {
    Tree tree = cfg.tree;
    set_field(tree, "run.seed", std::to_string(*seed));
    cfg = parse_config_tree(tree);
  }
  const std::filesystem::path dir = out.empty() ? default_run_dir(cfg) : std::filesystem::path(out);
  const RunResult r = run_experiment(cfg, dir, quiet ? nullptr : &std::cerr);
  std::cout << r.dir.string() << "\n" << r.summary["final"].dump() << "\n";
  return kExitOk;
}

int cmd_eval(const std::string& checkpoint, int episodes) {
  const auto e = cmdp::harness::evaluate_checkpoint(checkpoint, episodes);
  nlohmann::json j = {{"episodes", e.episodes},          {"reward_mean", e.reward_mean},
                      {"reward_std", e.reward_std},      {"violations_total", e.violations_total},
                      {"violations", e.violations},      {"mean_excess", e.mean_excess},
                      {"mean_deviation", e.mean_deviation}, {"min_cost_value", e.min_cost_value}};
  std::cout << j.dump(2) << "\n";
  return kExitOk;
}

int cmd_compare(const std::vector<std::string>& dirs, const std::string& csv_path) {
  std::vector<std::filesystem::path> paths(dirs.begin(), dirs.end());
  const auto rows = cmdp::harness::compare(paths);
  std::cout << cmdp::harness::comparison_text(rows);
  const std::string csv = cmdp::harness::comparison_csv(rows);
  if (csv_path.empty()) {
    std::cout << "\n" << csv;
  } else {
    std::ofstream(csv_path, std::ios::binary) << csv;
  }
  return kExitOk;
}

int cmd_sweep(const std::string& config_path, const std::string& grid_path, const std::string& out, bool quiet) {
  using namespace cmdp::harness;
  const ExperimentConfig base = load_config(config_path);
  const Grid grid = load_grid(grid_path);
  const std::filesystem::path dir = out.empty() ? std::filesystem::path(base.run.output_dir) / "sweep" : std::filesystem::path(out);
  // Expanding first validates every combination before any run starts.
  expand_sweep(base, grid, dir);
  for (const auto& e : sweep(base, grid, dir, quiet ? nullptr : &std::cerr)) std::cout << e.dir.string() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained policy optimization experiments"};
  app.require_subcommand(1);

  std::string config, out, checkpoint, grid, csv;
  std::optional<std::uint64_t> seed;
  int episodes = 10;
  bool quiet = false;
  std::vector<std::string> dirs;

  auto* train = app.add_subcommand("train", "Train one configuration");
  train->add_option("--config", config, "Experiment INI file")->required();
  train->add_option("--seed", seed, "Override run.seed");
  train->add_option("--out", out, "Run directory");
  train->add_flag("--quiet", quiet, "No per-iteration log");

  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint with the deterministic policy");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint base path or file")->required();
  eval->add_option("--episodes", episodes, "Episodes")->required()->check(CLI::PositiveNumber);

  auto* cmp = app.add_subcommand("compare", "Tabulate final performance of run directories");
  cmp->add_option("dirs", dirs, "Run directories")->required();
  cmp->add_option("--csv", csv, "Write the CSV table here instead of stdout");

  auto* sw = app.add_subcommand("sweep", "Run a Cartesian parameter grid");
  sw->add_option("--config", config, "Base experiment INI file")->required();
  sw->add_option("--grid", grid, "Grid INI file")->required();
  sw->add_option("--out", out, "Sweep directory");
  sw->add_flag("--quiet", quiet, "No progress log");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*train) return cmd_train(config, seed, out, quiet);
    if (*eval) return cmd_eval(checkpoint, episodes);
    if (*cmp) return cmd_compare(dirs, csv);
    if (*sw) return cmd_sweep(config, grid, out, quiet);
  } catch (const cmdp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const cmdp::NumericError& e) {
    std::cerr << "numeric abort: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}
