#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <nlohmann/json.hpp>

#include "cmdp/algos/trainer.hpp"
#include "cmdp/envs/pointmass.hpp"
#include "cmdp/envs/tabular.hpp"
#include "cmdp/error.hpp"
#include "cmdp/harness/compare.hpp"
#include "cmdp/harness/config.hpp"
#include "cmdp/harness/run.hpp"
#include "cmdp/oracle/oracle.hpp"
#include "cmdp/rollout/advantage.hpp"

namespace py = pybind11;
using namespace cmdp;

namespace {

py::object to_python(const nlohmann::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

py::dict step_dict(const StepResult& r) {
  py::dict d;
  d["observation"] = r.next_observation;
  d["reward"] = r.reward;
  d["costs"] = r.costs;
  d["violated"] = std::vector<bool>(r.violated.begin(), r.violated.end());
  d["excess"] = r.excess;
  d["terminated"] = r.terminated;
  d["truncated"] = r.truncated;
  return d;
}

py::dict eval_dict(const EvalSummary& s) {
  py::dict d;
  d["episodes"] = s.episodes;
  d["reward_mean"] = s.reward_mean;
  d["reward_std"] = s.reward_std;
  d["violations_total"] = s.violations_total;
  d["violations"] = s.violations;
  d["mean_excess"] = s.mean_excess;
  d["mean_deviation"] = s.mean_deviation;
  return d;
}

py::dict record_dict(const MetricsRecord& r) {
  py::dict d;
  d["iteration"] = r.iteration;
  d["ep_reward_mean"] = r.ep_reward_mean;
  d["ep_reward_std"] = r.ep_reward_std;
  d["violations_total"] = r.violations_total;
  d["violations"] = r.violations;
  d["cost_returns"] = r.cost_returns;
  d["kappa"] = r.kappa;
  d["lambda_eff"] = r.lambda_eff;
  d["nu"] = r.nu;
  d["entropy_coef"] = r.entropy_coef;
  return d;
}

harness::ExperimentConfig config_with_overrides(const harness::ExperimentConfig& base, const py::dict& overrides) {
  if (overrides.empty()) return base;
  harness::Tree tree = base.tree;
  for (const auto& [k, v] : overrides) {
    harness::set_field(tree, py::str(k), py::str(v));
  }
  return harness::parse_config_tree(tree);
}

// Training state behind a Python object; owns the configuration it was built from.
class PyTrainer {
 public:
  explicit PyTrainer(harness::ExperimentConfig cfg)
      : cfg_(std::move(cfg)), trainer_(cfg_.trainer_settings(), cfg_.env_factory()) {}

  py::dict step() { return record_dict(trainer_.train_iteration()); }
  py::dict evaluate(int episodes) const { return eval_dict(trainer_.evaluate(episodes)); }
  std::int64_t iteration() const { return trainer_.iteration(); }
  std::vector<double> mean_action(const std::vector<double>& observation) const {
    Matrix obs(1, static_cast<Eigen::Index>(observation.size()));
    for (std::size_t i = 0; i < observation.size(); ++i) obs(0, static_cast<Eigen::Index>(i)) = observation[i];
    const Matrix a = trainer_.model().mean_action(obs);
    return {a.data(), a.data() + a.size()};
  }

 private:
  harness::ExperimentConfig cfg_;
  Trainer trainer_;
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Constrained policy optimization on desk-scale CMDPs";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  py::class_<harness::ExperimentConfig>(m, "Config")
      .def_property_readonly("algorithm", [](const harness::ExperimentConfig& c) { return std::string(to_string(c.algo.algorithm)); })
      .def_property_readonly("seed", [](const harness::ExperimentConfig& c) { return c.run.seed; })
      .def_property_readonly("iterations", [](const harness::ExperimentConfig& c) { return c.run.iterations; })
      .def_property_readonly("label", &harness::ExperimentConfig::display_label)
      .def("to_ini", [](const harness::ExperimentConfig& c) { return harness::to_ini(c.tree); })
      .def("with_fields", &config_with_overrides, py::arg("fields"),
           "Copy with 'section.key' fields replaced; values are given as strings or numbers.");

  m.def("load_config", &harness::load_config, py::arg("path"));
  m.def("parse_config", &harness::parse_config_text, py::arg("text"), py::arg("origin") = "<python>");

  m.def(
      "train",
      [](const harness::ExperimentConfig& cfg, const std::filesystem::path& out) {
        const auto r = harness::run_experiment(cfg, out.empty() ? harness::default_run_dir(cfg) : out);
        return to_python(r.summary);
      },
      py::arg("config"), py::arg("out") = std::filesystem::path(),
      "Runs an experiment, writes its directory and returns summary.json as a dict.");
  m.def(
      "evaluate",
      [](const std::filesystem::path& checkpoint, int episodes) {
        return eval_dict(harness::evaluate_checkpoint(checkpoint, episodes));
      },
      py::arg("checkpoint"), py::arg("episodes"));
  m.def(
      "compare",
      [](const std::vector<std::filesystem::path>& dirs) {
        py::list rows;
        for (const auto& r : harness::compare(dirs)) {
          py::dict d;
          d["algorithm"] = r.algorithm;
          d["label"] = r.label;
          d["runs"] = r.runs;
          d["reward_mean"] = r.reward_mean;
          d["reward_std"] = r.reward_std;
          d["violations_mean"] = r.violations_mean;
          d["violations_std"] = r.violations_std;
          rows.append(d);
        }
        return rows;
      },
      py::arg("run_dirs"));

  py::class_<PyTrainer>(m, "Trainer")
      .def(py::init<harness::ExperimentConfig>(), py::arg("config"))
      .def("step", &PyTrainer::step, "One collect/update iteration; returns its metrics.")
      .def("evaluate", &PyTrainer::evaluate, py::arg("episodes"))
      .def("mean_action", &PyTrainer::mean_action, py::arg("observation"))
      .def_property_readonly("iteration", &PyTrainer::iteration);

  py::class_<PointMassEnv>(m, "PointMassEnv")
      .def(py::init([](int episode_length, const std::string& cost_shape) {
             PointMassConfig c;
             c.episode_length = episode_length;
             c.cost_shape = parse_cost_shape(cost_shape);
             return PointMassEnv(c);
           }),
           py::arg("episode_length") = 200, py::arg("cost_shape") = "indicator")
      .def("reset", [](PointMassEnv& e, std::uint64_t seed) { return e.reset(seed); }, py::arg("seed"))
      .def("step", [](PointMassEnv& e, const std::vector<double>& a) { return step_dict(e.step(a)); },
           py::arg("action"))
      .def_property_readonly("n_constraints", [](const PointMassEnv& e) { return e.spec().n_constraints(); });

  m.def(
      "chain_exact_returns",
      [](int n_states, double slip, const std::vector<double>& action_probs, double gamma) {
        const auto r = oracle::exact_policy_eval(make_chain_cmdp(n_states, slip),
                                                 TabularPolicy::constant(n_states, action_probs), gamma);
        return py::make_tuple(r.reward, r.costs);
      },
      py::arg("n_states"), py::arg("slip"), py::arg("action_probs"), py::arg("gamma"),
      "Exact discounted (J_R, [J_C...]) on the chain CMDP under a state-independent policy.");

  m.def(
      "gae",
      [](const std::vector<double>& values, const std::vector<double>& next_values, const std::vector<double>& signal,
         double gamma, double lam, const std::vector<bool>& terminated, const std::vector<bool>& episode_end) {
        const std::vector<std::uint8_t> term(terminated.begin(), terminated.end());
        const std::vector<std::uint8_t> end(episode_end.begin(), episode_end.end());
        return gae(values, next_values, signal, gamma, lam, term, end);
      },
      py::arg("values"), py::arg("next_values"), py::arg("signal"), py::arg("gamma"), py::arg("lam"),
      py::arg("terminated"), py::arg("episode_end"));
  m.def(
      "normalize_advantages",
      [](const std::vector<double>& adv) {
        const auto n = normalize_advantages(adv);
        return py::make_tuple(n.values, n.mean, n.std, n.degenerate);
      },
      py::arg("adv"));
  m.def(
      "kappa_schedule",
      [](std::int64_t iteration, double min0, double growth, double cap) {
        KappaSchedule s;
        s.enabled = true;
        s.min0 = min0;
        s.growth = growth;
        s.cap = cap;
        return kappa_schedule(iteration, s);
      },
      py::arg("iteration"), py::arg("min0") = 0.1, py::arg("growth") = 1.0004, py::arg("cap") = 0.2);
}
