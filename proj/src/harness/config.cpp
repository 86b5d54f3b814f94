#include "cmdp/harness/config.hpp"

#include <boost/property_tree/ini_parser.hpp>

#include <algorithm>
#include <cctype>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "cmdp/envs/tabular.hpp"
#include "cmdp/error.hpp"

namespace cmdp::harness {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& field, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(field, "expected a number, got '" + v + "'");
  }
}

std::int64_t to_int(const std::string& field, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long i = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw ConfigError(field, "expected an integer, got '" + v + "'");
  }
}

int to_int32(const std::string& field, const std::string& v) {
  const auto i = to_int(field, v);
  if (i < -2147483647 || i > 2147483647) throw ConfigError(field, "value out of range");
  return static_cast<int>(i);
}

std::uint64_t to_seed(const std::string& field, const std::string& v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
    const unsigned long long i = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw ConfigError(field, "expected a non-negative integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& field, const std::string& v) {
  std::string s = v;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError(field, "expected a boolean, got '" + v + "'");
}

// Elements separated by commas and/or whitespace.
std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : v) {
    if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<double> to_doubles(const std::string& field, const std::string& v) {
  std::vector<double> out;
  for (const auto& s : split_list(v)) out.push_back(to_double(field, s));
  if (out.empty()) throw ConfigError(field, "expected at least one number");
  return out;
}

std::vector<int> to_ints(const std::string& field, const std::string& v) {
  std::vector<int> out;
  for (const auto& s : split_list(v)) out.push_back(to_int32(field, s));
  if (out.empty()) throw ConfigError(field, "expected at least one integer");
  return out;
}

template <typename F>
auto enum_value(const std::string& field, F parse, const std::string& v) {
  try {
    return parse(v);
  } catch (const std::exception& e) {
    throw ConfigError(field, e.what());
  }
}

using Setter = std::function<void(ExperimentConfig&, const std::string& field, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    // [env]
    t["env.name"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) {
      if (v != "pointmass" && v != "chain") throw ConfigError(f, "unknown environment '" + v + "'");
      c.env.name = v;
    };
    t["env.n_envs"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) { c.env.n_envs = to_int32(f, v); };
    t["env.episode_length"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) {
      c.env.pointmass.episode_length = to_int32(f, v);
    };
    t["env.dt"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) { c.env.pointmass.dt = to_double(f, v); };
    t["env.v_max"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) { c.env.pointmass.v_max = to_double(f, v); };
    t["env.a_max"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) { c.env.pointmass.a_max = to_double(f, v); };
    t["env.position_bound"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) {
      c.env.pointmass.position_bound = to_double(f, v);
    };
    t["env.rate_limit"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) {
      c.env.pointmass.rate_limit = to_double(f, v);
    };
    t["env.second_diff_limit"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) {
      c.env.pointmass.second_diff_limit = to_double(f, v);
    };
    t["env.cost_shape"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) {
      c.env.pointmass.cost_shape = enum_value(f, [](const std::string& s) { return parse_cost_shape(s); }, v);
    };
    t["env.effort_weight"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) {
      c.env.pointmass.effort_weight = to_double(f, v);
    };
    t["env.target_range"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) {
      const auto r = to_doubles(f, v);
      if (r.size() != 2) throw ConfigError(f, "expected two values");
      c.env.pointmass.target_range = {r[0], r[1]};
    };
    t["env.scale_observation"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) {
      c.env.pointmass.scale_observation = to_bool(f, v);
    };
    t["env.thresholds"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) {
      c.env.pointmass.thresholds = to_doubles(f, v);
    };
    t["env.cost_groups"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) {
      c.env.pointmass.cost_group_map = to_ints(f, v);
    };
    t["env.chain_states"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) {
      c.env.chain_states = to_int32(f, v);
    };
    t["env.chain_thresholds"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) {
      c.env.chain_thresholds = to_doubles(f, v);
    };
    t["env.chain_slip"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) {
      c.env.chain_slip = to_double(f, v);
    };
    // [algo]
    t["algo.algorithm"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) {
      c.algo.algorithm = enum_value(f, [](const std::string& s) { return parse_algorithm(s); }, v);
    };
    t["algo.clip"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) { c.algo.clip = to_double(f, v); };
    t["algo.gamma"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) { c.algo.gamma = to_double(f, v); };
    t["algo.gae_lambda"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) { c.algo.gae_lambda = to_double(f, v); };
    t["algo.epochs"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) { c.algo.epochs = to_int32(f, v); };
    t["algo.minibatches"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) { c.algo.minibatches = to_int32(f, v); };
    t["algo.learning_rate"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) {
      c.algo.learning_rate = to_double(f, v);
    };
    t["algo.critic_learning_rate"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) {
      c.algo.critic_learning_rate = to_double(f, v);
    };
    t["algo.max_grad_norm"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) {
      c.algo.max_grad_norm = to_double(f, v);
    };
    t["algo.kappa"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) { c.algo.kappa = to_doubles(f, v); };
    t["algo.kappa_schedule"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) {
      c.algo.kappa_schedule.enabled = to_bool(f, v);
    };
    t["algo.kappa_min0"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) {
      c.algo.kappa_schedule.min0 = to_double(f, v);
    };
    t["algo.kappa_growth"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) {
      c.algo.kappa_schedule.growth = to_double(f, v);
    };
    t["algo.kappa_cap"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) {
      c.algo.kappa_schedule.cap = to_double(f, v);
    };
    t["algo.lambda_init"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) { c.algo.lambda_init = to_double(f, v); };
    t["algo.lambda_lr"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) { c.algo.lambda_lr = to_double(f, v); };
    t["algo.lambda_optimizer"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) {
      c.algo.lambda_optimizer = enum_value(f, [](const std::string& s) { return parse_dual_optimizer(s); }, v);
    };
    t["algo.barrier_k"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) { c.algo.barrier_k = to_double(f, v); };
    t["algo.lambda_rec"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) { c.algo.lambda_rec = to_double(f, v); };
    t["algo.nu_init"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) { c.algo.nu_init = to_double(f, v); };
    t["algo.nu_max"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) { c.algo.nu_max = to_double(f, v); };
    t["algo.nu_lr"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) { c.algo.nu_lr = to_double(f, v); };
    t["algo.focops_temperature"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) {
      c.algo.focops_temperature = to_double(f, v);
    };
    t["algo.entropy_coef"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) {
      c.algo.entropy_coef = to_double(f, v);
    };
    t["algo.entropy_decay"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) {
      c.algo.entropy_decay = to_double(f, v);
    };
    t["algo.hidden"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) { c.model.hidden = to_ints(f, v); };
    t["algo.activation"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) {
      c.model.activation = enum_value(f, [](const std::string& s) { return parse_activation(s); }, v);
    };
    t["algo.cost_head"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) {
      c.model.cost_head = enum_value(f, [](const std::string& s) { return parse_output_head(s); }, v);
    };
    t["algo.log_std_init"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) {
      c.model.log_std_init = to_double(f, v);
    };
    // [run]
    t["run.seed"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) { c.run.seed = to_seed(f, v); };
    t["run.iterations"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) { c.run.iterations = to_int(f, v); };
    t["run.steps_per_env"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) {
      c.run.steps_per_env = to_int32(f, v);
    };
    t["run.eval_episodes"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) {
      c.run.eval_episodes = to_int32(f, v);
    };
    t["run.checkpoint_every"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) {
      c.run.checkpoint_every = to_int32(f, v);
    };
    t["run.label"] = [](ExperimentConfig& c, const std::string&, const std::string& v) { c.run.label = v; };
    t["run.wall_clock"] = [](ExperimentConfig& c, const std::string& f, const std::string& v) { c.run.wall_clock = to_bool(f, v); };
    t["run.output_dir"] = [](ExperimentConfig& c, const std::string&, const std::string& v) { c.run.output_dir = v; };
    return t;
  }();
  return table;
}

void validate(const ExperimentConfig& c) {
  auto wrap = [](const std::string& section, const std::function<void()>& f) {
    try {
      f();
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      // Validators report "field: message".
      const std::string msg = e.what();
      const auto colon = msg.find(':');
      if (colon == std::string::npos) throw ConfigError(section, msg);
      throw ConfigError(section + "." + msg.substr(0, colon), trim(msg.substr(colon + 1)));
    }
  };
  wrap("algo", [&] { c.algo.validate(); });
  if (c.env.n_envs <= 0) throw ConfigError("env.n_envs", "must be positive");
  if (c.run.iterations < 0) throw ConfigError("run.iterations", "must be non-negative");
  if (c.run.steps_per_env <= 0) throw ConfigError("run.steps_per_env", "must be positive");
  if (c.run.eval_episodes < 0) throw ConfigError("run.eval_episodes", "must be non-negative");
  if (c.run.checkpoint_every < 0) throw ConfigError("run.checkpoint_every", "must be non-negative");
  if (c.model.hidden.empty() ||
      std::any_of(c.model.hidden.begin(), c.model.hidden.end(), [](int h) { return h <= 0; })) {
    throw ConfigError("algo.hidden", "layer sizes must be positive");
  }
  const auto& pm = c.env.pointmass;
  if (pm.episode_length <= 0) throw ConfigError("env.episode_length", "must be positive");
  if (c.env.name == "pointmass") {
    if (!(pm.dt > 0.0)) throw ConfigError("env.dt", "must be positive");
    if (!(pm.v_max > 0.0)) throw ConfigError("env.v_max", "must be positive");
    if (!(pm.a_max > 0.0)) throw ConfigError("env.a_max", "must be positive");
    if (!(pm.position_bound > 0.0)) throw ConfigError("env.position_bound", "must be positive");
    if (pm.thresholds.size() != kPointMassConstraintCount) {
      throw ConfigError("env.thresholds", "expected one threshold per constraint (5)");
    }
    if (pm.cost_group_map.size() != kPointMassConstraintCount) {
      throw ConfigError("env.cost_groups", "expected one group per constraint (5)");
    }
  } else {
    if (c.env.chain_states < 3) throw ConfigError("env.chain_states", "must be at least 3");
    if (!(c.env.chain_slip >= 0.0 && c.env.chain_slip <= 0.5)) throw ConfigError("env.chain_slip", "must lie in [0, 0.5]");
    if (!c.env.chain_thresholds.empty() && c.env.chain_thresholds.size() != 2) {
      throw ConfigError("env.chain_thresholds", "expected one threshold per constraint (2)");
    }
    if (std::any_of(c.env.chain_thresholds.begin(), c.env.chain_thresholds.end(), [](double e) { return e < 0.0; })) {
      throw ConfigError("env.chain_thresholds", "thresholds must be non-negative");
    }
  }
  if (std::any_of(pm.thresholds.begin(), pm.thresholds.end(), [](double e) { return e < 0.0; })) {
    throw ConfigError("env.thresholds", "thresholds must be non-negative");
  }
  CmdpSpec spec;
  try {
    spec = c.env_factory()()->spec();
    spec.validate();
  } catch (const std::exception& e) {
    throw ConfigError("env", e.what());
  }
}

}  // namespace

bool is_known_field(const std::string& dotted_key) { return setters().count(dotted_key) != 0; }

void set_field(Tree& tree, const std::string& dotted_key, const std::string& value) {
  if (!is_known_field(dotted_key)) throw ConfigError(dotted_key, "unknown configuration key");
  tree.put(Tree::path_type(dotted_key, '.'), value);
}

ExperimentConfig parse_config_tree(const Tree& tree) {
  ExperimentConfig c;
  c.tree = tree;
  bool have_seed = false;
  for (const auto& [section, body] : tree) {
    if (section != "env" && section != "algo" && section != "run") {
      throw ConfigError(section, "unknown section (expected env, algo or run)");
    }
    if (body.empty() && !body.data().empty()) throw ConfigError(section, "keys must live inside a section");
    for (const auto& [key, node] : body) {
      const std::string field = section + "." + key;
      const auto it = setters().find(field);
      if (it == setters().end()) throw ConfigError(field, "unknown configuration key");
      it->second(c, field, trim(node.data()));
      if (field == "run.seed") have_seed = true;
    }
  }
  if (!have_seed) throw ConfigError("run.seed", "a seed is required");
  c.env.pointmass.discount = c.algo.gamma;
  validate(c);
  return c;
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
  Tree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("", origin + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  return parse_config_tree(tree);
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

std::string to_ini(const Tree& tree) {
  std::ostringstream out;
  boost::property_tree::ini_parser::write_ini(out, tree);
  return out.str();
}

std::string ExperimentConfig::display_label() const {
  return run.label.empty() ? std::string(to_string(algo.algorithm)) : run.label;
}

TrainerSettings ExperimentConfig::trainer_settings() const {
  TrainerSettings s;
  s.algo = algo;
  s.model = model;
  s.n_envs = env.n_envs;
  s.steps_per_env = run.steps_per_env;
  s.eval_episodes = run.eval_episodes;
  s.seed = run.seed;
  s.wall_clock = run.wall_clock;
  return s;
}

EnvFactory ExperimentConfig::env_factory() const {
  if (env.name == "chain") {
    const TabularCmdp cmdp = make_chain_cmdp(env.chain_states, env.chain_slip);
    const double gamma = algo.gamma;
    const int length = env.pointmass.episode_length;
    const std::vector<double> thresholds = env.chain_thresholds;
    return [cmdp, gamma, length, thresholds]() -> std::unique_ptr<Env> {
      return std::make_unique<TabularEnv>(cmdp, gamma, length, thresholds);
    };
  }
  const PointMassConfig pm = env.pointmass;
  return [pm]() -> std::unique_ptr<Env> { return std::make_unique<PointMassEnv>(pm); };
}

}  // namespace cmdp::harness
