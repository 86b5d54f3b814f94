#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>

#include "cmdp/algos/config.hpp"
#include "cmdp/algos/trainer.hpp"
#include "cmdp/envs/pointmass.hpp"

namespace cmdp::harness {

using Tree = boost::property_tree::ptree;

struct EnvConfig {
  std::string name = "pointmass";  // pointmass | chain
  int n_envs = 4;
  PointMassConfig pointmass;
  int chain_states = 10;
  double chain_slip = 0.1;
  std::vector<double> chain_thresholds;  // empty: 0 for both channels
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::int64_t iterations = 300;
  int steps_per_env = 256;
  int eval_episodes = 0;
  int checkpoint_every = 0;  // 0: final checkpoint only
  std::string label;
  bool wall_clock = true;
  std::string output_dir = "runs";
};

struct ExperimentConfig {
  EnvConfig env;
  AlgorithmConfig algo;
  ModelConfig model;
  RunConfig run;
  Tree tree;  // effective key/value text, written as config.copy

  std::string display_label() const;
  TrainerSettings trainer_settings() const;
  EnvFactory env_factory() const;
};

// INI text with [env], [algo] and [run] sections. Syntax errors raise
// ConfigError with the line number; unknown keys, bad values and a missing
// run.seed raise ConfigError naming the field.
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config_tree(const Tree& tree);

// Sets "section.key" on the tree after checking the key is known.
void set_field(Tree& tree, const std::string& dotted_key, const std::string& value);
bool is_known_field(const std::string& dotted_key);

std::string to_ini(const Tree& tree);

}  // namespace cmdp::harness
