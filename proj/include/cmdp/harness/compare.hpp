#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cmdp/harness/config.hpp"

namespace cmdp::harness {

struct ComparisonRow {
  std::string algorithm;
  std::string label;
  int runs = 0;
  double reward_mean = 0.0;
  double reward_std = 0.0;  // across seeds, or within the window for a single run
  double violations_mean = 0.0;
  double violations_std = 0.0;
};

// Groups run summaries by label. Rows follow the declared algorithm order,
// then label. Throws std::runtime_error when a summary.json is missing.
std::vector<ComparisonRow> compare(const std::vector<std::filesystem::path>& run_dirs);
std::vector<ComparisonRow> compare_summaries(const std::vector<nlohmann::json>& summaries);

std::string comparison_text(const std::vector<ComparisonRow>& rows);
std::string comparison_csv(const std::vector<ComparisonRow>& rows);

struct SweepEntry {
  std::filesystem::path dir;
  std::vector<std::pair<std::string, std::string>> params;
  std::uint64_t seed = 0;
};

// Grid file: INI sections whose values are comma-separated alternatives
// (list-valued fields separate their elements with spaces). Every key is
// checked before anything runs.
using Grid = std::vector<std::pair<std::string, std::vector<std::string>>>;
Grid load_grid(const std::filesystem::path& path);
Grid parse_grid_text(const std::string& text);

// Expands the Cartesian product. Each combination gets a seed derived from
// the base seed unless run.seed is itself gridded; an empty grid yields the
// base config unchanged.
std::vector<std::pair<ExperimentConfig, SweepEntry>> expand_sweep(const ExperimentConfig& base, const Grid& grid,
                                                                   const std::filesystem::path& out_dir);

// Runs every combination and writes manifest.json into out_dir.
std::vector<SweepEntry> sweep(const ExperimentConfig& base, const Grid& grid, const std::filesystem::path& out_dir,
                              std::ostream* log = nullptr);

}  // namespace cmdp::harness
