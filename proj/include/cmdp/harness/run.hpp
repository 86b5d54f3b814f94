#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cmdp/algos/trainer.hpp"
#include "cmdp/harness/config.hpp"

namespace cmdp::harness {

inline constexpr int kSummaryWindow = 10;

// metrics.csv header for a run with the given constraint and group counts.
std::string metrics_header(int n_constraints, int n_groups);
std::string metrics_row(const MetricsRecord& r);

struct RunResult {
  std::filesystem::path dir;
  std::vector<MetricsRecord> records;
  nlohmann::json summary;
};

// Trains per the config and writes metrics.csv, summary.json, config.copy
// and checkpoints into `dir`. On a numeric abort, snapshot.json is written
// and the NumericError is rethrown.
RunResult run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& dir,
                         std::ostream* log = nullptr);

// Default directory for a run: <output_dir>/<label>_seed<seed>.
std::filesystem::path default_run_dir(const ExperimentConfig& cfg);

// Final-window statistics over the last kSummaryWindow records.
nlohmann::json summarize(const std::vector<MetricsRecord>& records, const EvalSummary& final_eval,
                         const ExperimentConfig& cfg, double min_cost_value);

// Loads a checkpoint written by run_experiment and evaluates its policy.
EvalSummary evaluate_checkpoint(const std::filesystem::path& checkpoint, int episodes);

}  // namespace cmdp::harness
