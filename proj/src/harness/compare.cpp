#include "cmdp/harness/compare.hpp"

#include <boost/property_tree/ini_parser.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "cmdp/error.hpp"
#include "cmdp/harness/run.hpp"
#include "cmdp/rng.hpp"

namespace cmdp::harness {
namespace {

std::string fmt(double v, int precision = 4) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

int algorithm_rank(const std::string& name) {
  try {
    const Algorithm a = parse_algorithm(name);
    for (std::size_t i = 0; i < kAllAlgorithms.size(); ++i) {
      if (kAllAlgorithms[i] == a) return static_cast<int>(i);
    }
  } catch (const std::exception&) {
  }
  return static_cast<int>(kAllAlgorithms.size());
}

std::pair<double, double> mean_and_sample_std(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return {m, v.size() > 1 ? std::sqrt(s / static_cast<double>(v.size() - 1)) : 0.0};
}

std::vector<std::string> split_alternatives(const std::string& v) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(v);
  while (std::getline(in, cur, ',')) {
    const auto b = cur.find_first_not_of(" \t");
    const auto e = cur.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(cur.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

std::vector<ComparisonRow> compare_summaries(const std::vector<nlohmann::json>& summaries) {
  struct Group {
    std::string algorithm;
    std::vector<double> reward, violations;
    double reward_std = 0.0, violations_std = 0.0;
  };
  std::map<std::string, Group> groups;
  for (const auto& s : summaries) {
    const std::string label = s.at("label").get<std::string>();
    Group& g = groups[label];
    g.algorithm = s.at("algorithm").get<std::string>();
    const auto& fin = s.at("final");
    g.reward.push_back(fin.at("reward_mean").get<double>());
    g.violations.push_back(fin.at("violations_mean").get<double>());
    g.reward_std = fin.at("reward_std").get<double>();
    g.violations_std = fin.at("violations_std").get<double>();
  }
  std::vector<ComparisonRow> rows;
  for (const auto& [label, g] : groups) {
    ComparisonRow r;
    r.algorithm = g.algorithm;
    r.label = label;
    r.runs = static_cast<int>(g.reward.size());
    std::tie(r.reward_mean, r.reward_std) = mean_and_sample_std(g.reward);
    std::tie(r.violations_mean, r.violations_std) = mean_and_sample_std(g.violations);
    if (r.runs == 1) {
      r.reward_std = g.reward_std;
      r.violations_std = g.violations_std;
    }
    rows.push_back(r);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const ComparisonRow& a, const ComparisonRow& b) {
    const int ra = algorithm_rank(a.algorithm), rb = algorithm_rank(b.algorithm);
    if (ra != rb) return ra < rb;
    return a.label < b.label;
  });
  return rows;
}

std::vector<ComparisonRow> compare(const std::vector<std::filesystem::path>& run_dirs) {
  if (run_dirs.empty()) throw std::invalid_argument("compare needs at least one run directory");
  std::vector<nlohmann::json> summaries;
  for (const auto& d : run_dirs) {
    std::ifstream in(d / "summary.json");
    if (!in) throw std::runtime_error("missing summary.json in " + d.string());
    summaries.push_back(nlohmann::json::parse(in));
  }
  return compare_summaries(summaries);
}

std::string comparison_text(const std::vector<ComparisonRow>& rows) {
  std::size_t w_alg = 9, w_label = 5;
  for (const auto& r : rows) {
    w_alg = std::max(w_alg, r.algorithm.size());
    w_label = std::max(w_label, r.label.size());
  }
  auto pad = [](std::string s, std::size_t w) {
    s.resize(std::max(w, s.size()), ' ');
    return s;
  };
  std::ostringstream out;
  out << pad("algorithm", w_alg) << "  " << pad("label", w_label) << "  runs  " << pad("reward", 22)
      << "  violations/episode\n";
  for (const auto& r : rows) {
    out << pad(r.algorithm, w_alg) << "  " << pad(r.label, w_label) << "  " << pad(std::to_string(r.runs), 4)
        << "  " << pad(fmt(r.reward_mean) + " +- " + fmt(r.reward_std), 22) << "  " << fmt(r.violations_mean)
        << " +- " << fmt(r.violations_std) << "\n";
  }
  return out.str();
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::ostringstream out;
  out << "algorithm,label,runs,reward_mean,reward_std,violations_mean,violations_std\n";
  for (const auto& r : rows) {
    out << r.algorithm << "," << r.label << "," << r.runs << "," << fmt(r.reward_mean, 6) << ","
        << fmt(r.reward_std, 6) << "," << fmt(r.violations_mean, 6) << "," << fmt(r.violations_std, 6) << "\n";
  }
  return out.str();
}

Grid parse_grid_text(const std::string& text) {
  Tree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("", "grid:" + std::to_string(e.line()) + ": " + e.message());
  }
  Grid grid;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ConfigError(section, "grid keys must live inside a section");
    for (const auto& [key, node] : body) {
      const std::string field = section + "." + key;
      if (!is_known_field(field)) throw ConfigError(field, "unknown configuration key in grid");
      auto values = split_alternatives(node.data());
      if (values.empty()) throw ConfigError(field, "grid entry has no values");
      grid.emplace_back(field, std::move(values));
    }
  }
  return grid;
}

Grid load_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open grid file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_grid_text(ss.str());
}

std::vector<std::pair<ExperimentConfig, SweepEntry>> expand_sweep(const ExperimentConfig& base, const Grid& grid,
                                                                   const std::filesystem::path& out_dir) {
  std::vector<std::pair<ExperimentConfig, SweepEntry>> out;
  if (grid.empty()) {
    SweepEntry e{out_dir / "run_0000", {}, base.run.seed};
    out.emplace_back(base, e);
    return out;
  }
  const bool seed_gridded =
      std::any_of(grid.begin(), grid.end(), [](const auto& kv) { return kv.first == "run.seed"; });
  std::size_t total = 1;
  for (const auto& [k, v] : grid) total *= v.size();
  for (std::size_t n = 0; n < total; ++n) {
    Tree tree = base.tree;
    SweepEntry e;
    std::size_t rem = n;
    for (auto it = grid.rbegin(); it != grid.rend(); ++it) {
      const std::size_t pick = rem % it->second.size();
      rem /= it->second.size();
      e.params.emplace(e.params.begin(), it->first, it->second[pick]);
    }
    for (const auto& [k, v] : e.params) set_field(tree, k, v);
    if (!seed_gridded) set_field(tree, "run.seed", std::to_string(derive_seed(base.run.seed, n)));
    char name[32];
    std::snprintf(name, sizeof name, "run_%04zu", n);
    e.dir = out_dir / name;
    ExperimentConfig cfg = parse_config_tree(tree);
    e.seed = cfg.run.seed;
    out.emplace_back(std::move(cfg), std::move(e));
  }
  return out;
}

std::vector<SweepEntry> sweep(const ExperimentConfig& base, const Grid& grid, const std::filesystem::path& out_dir,
                              std::ostream* log) {
  const auto plan = expand_sweep(base, grid, out_dir);
  std::filesystem::create_directories(out_dir);
  nlohmann::json manifest = nlohmann::json::array();
  for (const auto& [cfg, e] : plan) {
    nlohmann::json params = nlohmann::json::object();
    for (const auto& [k, v] : e.params) params[k] = v;
    manifest.push_back({{"dir", e.dir.filename().string()}, {"seed", e.seed}, {"params", params}});
  }
  {
    std::ofstream m(out_dir / "manifest.json", std::ios::binary);
    m << manifest.dump(2) << "\n";
  }
  std::vector<SweepEntry> done;
  for (const auto& [cfg, e] : plan) {
    if (log != nullptr) *log << "sweep: " << e.dir.string() << "\n";
    run_experiment(cfg, e.dir);
    done.push_back(e);
  }
  return done;
}

}  // namespace cmdp::harness
