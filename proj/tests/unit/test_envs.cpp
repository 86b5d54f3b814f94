#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <vector>

#include "cmdp/envs/pointmass.hpp"
#include "cmdp/envs/tabular.hpp"
#include "cmdp/error.hpp"
#include "cmdp/oracle/oracle.hpp"
#include "cmdp/rng.hpp"

using namespace cmdp;

namespace {

struct ShapeCase {
  std::vector<double> excess;
  double indicator, count, relu, relu2;
};

void check_shapes(const ShapeCase& c) {
  CHECK(cost_shape_eval(c.excess, CostShape::kIndicator) == c.indicator);
  CHECK(cost_shape_eval(c.excess, CostShape::kCount) == c.count);
  CHECK(cost_shape_eval(c.excess, CostShape::kRelu) == doctest::Approx(c.relu).epsilon(1e-15));
  CHECK(cost_shape_eval(c.excess, CostShape::kReluSquared) == doctest::Approx(c.relu2).epsilon(1e-15));
}

}  // namespace

TEST_CASE("cost shapes") {
  check_shapes({{0.0, 0.0, 0.0}, 0, 0, 0, 0});
  check_shapes({{0.5}, 1, 1, 0.5, 0.25});
  check_shapes({{0.5, 1.0}, 1, 2, 1.5, 1.25});
  CHECK(parse_cost_shape("relu2") == CostShape::kReluSquared);
  CHECK(parse_cost_shape(to_string(CostShape::kCount)) == CostShape::kCount);
  CHECK_THROWS_AS(parse_cost_shape("hinge"), std::invalid_argument);
}

TEST_CASE("point-mass step at rest") {
  PointMassConfig cfg;
  PointMassState s;
  const double a[] = {0.0, 0.0};
  auto tr = pointmass_step(s, a, cfg);
  CHECK(tr.result.reward == 1.0);
  for (double c : tr.result.costs) CHECK(c == 0.0);
  for (auto v : tr.result.violated) CHECK(v == 0);
  CHECK(tr.result.next_observation.size() == kPointMassObservationDim);
  CHECK(tr.state.step == 1);
}

TEST_CASE("tracking reward is one when velocity matches the target") {
  PointMassConfig cfg;
  cfg.effort_weight = 0.0;
  for (double tx : {-2.0, 0.3, 1.9}) {
    PointMassState s;
    s.target = {tx, -0.7};
    s.velocity = {tx, -0.7};
    const double a[] = {0.0, 0.0};
    CHECK(pointmass_step(s, a, cfg).result.reward == 1.0);
  }
}

TEST_CASE("speed violation sets cost and flag") {
  PointMassConfig cfg;
  PointMassState s;
  s.velocity = {cfg.v_max + 0.5, 0.0};
  const double a[] = {0.0, 0.0};
  auto r = pointmass_step(s, a, cfg).result;
  CHECK(r.costs[kSpeed] == 1.0);
  CHECK(r.violated[kSpeed] == 1);
  CHECK(r.excess[kSpeed] == doctest::Approx(0.5 / cfg.v_max));
  CHECK(r.costs[kActuation] == 0.0);
}

TEST_CASE("smoothness limits follow the action history") {
  PointMassConfig cfg;
  const double rate_step = cfg.effective_rate_limit() * cfg.dt;
  CHECK(cfg.effective_second_diff_limit() == doctest::Approx(cfg.effective_rate_limit() / cfg.dt));
  PointMassState s;
  const double ok[] = {0.9 * rate_step, 0.0};
  auto r = pointmass_step(s, ok, cfg).result;
  CHECK(r.violated[kCommandRate] == 0);
  s.prev_action = {0.6 * rate_step, 0.0};
  const double fast[] = {1.7 * rate_step, 0.0};
  r = pointmass_step(s, fast, cfg).result;
  CHECK(r.violated[kCommandRate] == 1);
  CHECK(r.violated[kCommandJerk] == 0);
  s.prev_action = {0.0, 0.0};
  const double bang[] = {2.0 * cfg.a_max, 0.0};
  r = pointmass_step(s, bang, cfg).result;
  CHECK(r.violated[kActuation] == 1);
  CHECK(r.violated[kCommandJerk] == 1);
}

TEST_CASE("point-mass step is a pure function") {
  PointMassConfig cfg;
  Rng rng(4);
  PointMassState s = pointmass_initial_state(rng, cfg);
  s.velocity = {0.4, -1.2};
  s.prev_action = {1.0, 2.0};
  const double a[] = {3.5, -0.25};
  auto x = pointmass_step(s, a, cfg);
  auto y = pointmass_step(s, a, cfg);
  CHECK(x.result.reward == y.result.reward);
  CHECK(x.result.costs == y.result.costs);
  CHECK(x.result.next_observation == y.result.next_observation);
}

TEST_CASE("point-mass input errors") {
  PointMassConfig cfg;
  PointMassState s;
  const double one[] = {1.0};
  CHECK_THROWS_AS(pointmass_step(s, one, cfg), ShapeError);
  const double bad[] = {std::nan(""), 0.0};
  CHECK_THROWS_AS(pointmass_step(s, bad, cfg), NumericError);
}

TEST_CASE("point-mass reset") {
  PointMassConfig cfg;
  PointMassEnv a(cfg), b(cfg);
  CHECK(a.reset(17) == b.reset(17));
  CHECK(a.reset(17) != a.reset(18));

  Rng rng(99);
  double mx = 0.0, my = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    auto s = pointmass_initial_state(rng, cfg);
    CHECK(std::abs(s.target[0]) <= cfg.target_range[0]);
    mx += s.target[0];
    my += s.target[1];
  }
  CHECK(std::abs(mx / n) < 0.02);
  CHECK(std::abs(my / n) < 0.02);
}

TEST_CASE("observation layout and scaling") {
  PointMassConfig cfg;
  PointMassState s;
  s.position = {cfg.position_bound, 0.0};
  s.velocity = {0.0, -cfg.v_max};
  s.prev_prev_action = {cfg.a_max, 0.0};
  auto o = pointmass_observation(s, cfg);
  REQUIRE(o.size() == kPointMassObservationDim);
  CHECK(o[0] == 1.0);
  CHECK(o[3] == -1.0);
  CHECK(o[8] == 1.0);
  cfg.scale_observation = false;
  o = pointmass_observation(s, cfg);
  CHECK(o[0] == cfg.position_bound);
}

TEST_CASE("violated flag matches the indicator cost on random play") {
  for (auto shape : {CostShape::kIndicator, CostShape::kCount, CostShape::kRelu, CostShape::kReluSquared}) {
    PointMassConfig cfg;
    cfg.cost_shape = shape;
    cfg.position_bound = 0.05;
    PointMassEnv env(cfg);
    env.reset(5);
    Rng rng(6);
    std::normal_distribution<double> d(0.0, 2.0 * cfg.a_max);
    for (int t = 0; t < 2000; ++t) {
      const double a[] = {d(rng), d(rng)};
      auto r = env.step(a);
      CHECK(r.reward > -1.0);
      for (int c = 0; c < kPointMassConstraintCount; ++c) {
        const auto i = static_cast<std::size_t>(c);
        CHECK(r.costs[i] >= 0.0);
        CHECK((r.violated[i] != 0) == (r.excess[i] > 0.0));
        CHECK((r.violated[i] != 0) == (r.costs[i] > 0.0));
      }
      if (r.truncated) env.reset();
    }
  }
}

TEST_CASE("tracking term stays in (0, 1]") {
  PointMassConfig cfg;
  cfg.effort_weight = 0.0;
  Rng rng(8);
  std::normal_distribution<double> d(0.0, 5.0);
  for (int i = 0; i < 1000; ++i) {
    PointMassState s;
    s.velocity = {d(rng), d(rng)};
    s.target = {d(rng), d(rng)};
    const double a[] = {d(rng), d(rng)};
    const double r = pointmass_step(s, a, cfg).result.reward;
    CHECK(r >= 0.0);
    CHECK(r <= 1.0);
  }
}

TEST_CASE("deterministic transition row") {
  TabularCmdp m = make_chain_cmdp(5, 0.0);
  Rng rng(1);
  for (int i = 0; i < 100; ++i) CHECK(tabular_step(m, 2, kChainAdvance, rng).next_state == 3);
  CHECK_THROWS_AS(tabular_step(m, 7, 0, rng), std::out_of_range);
  CHECK_THROWS_AS(tabular_step(m, 0, 2, rng), std::out_of_range);
}

TEST_CASE("sampled frequencies match the table") {
  TabularCmdp m = make_chain_cmdp(4, 0.3);
  Rng rng(11);
  const int n = 100000;
  int moved = 0;
  for (int i = 0; i < n; ++i) moved += tabular_step(m, 1, kChainAdvance, rng).next_state == 2;
  CHECK(std::abs(moved / double(n) - 0.7) < 0.01);
}

TEST_CASE("chi-squared goodness of fit on a dense row") {
  TabularCmdp m;
  m.n_states = 4;
  m.n_actions = 1;
  const std::vector<double> row{0.1, 0.2, 0.3, 0.4};
  for (int s = 0; s < 4; ++s) m.transition.insert(m.transition.end(), row.begin(), row.end());
  m.reward.assign(16, 0.0);
  m.initial_dist = {1.0, 0.0, 0.0, 0.0};
  m.validate();
  Rng rng(12);
  const int n = 100000;
  std::vector<double> counts(4, 0.0);
  for (int i = 0; i < n; ++i) counts[static_cast<std::size_t>(tabular_step(m, 0, 0, rng).next_state)] += 1.0;
  double stat = 0.0;
  for (std::size_t k = 0; k < 4; ++k) {
    const double e = n * row[k];
    stat += (counts[k] - e) * (counts[k] - e) / e;
  }
  boost::math::chi_squared dist(3.0);
  CHECK(stat < boost::math::quantile(dist, 1.0 - 0.001));
}

TEST_CASE("chain CMDP structure") {
  TabularCmdp m = make_chain_cmdp(10, 0.1);
  for (int s = 0; s < m.n_states; ++s) {
    for (int a = 0; a < m.n_actions; ++a) {
      double total = 0.0;
      for (int s2 = 0; s2 < m.n_states; ++s2) total += m.p(s, a, s2);
      CHECK(std::abs(total - 1.0) < 1e-12);
    }
  }
  CHECK_THROWS_AS(make_chain_cmdp(2, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(make_chain_cmdp(5, 0.9), std::invalid_argument);
}

TEST_CASE("chain returns for the two pure policies") {
  const double gamma = 0.9;
  TabularCmdp m = make_chain_cmdp(5, 0.0);
  const double advance[] = {0.0, 1.0};
  auto r = oracle::exact_policy_eval(m, TabularPolicy::constant(5, advance), gamma);
  CHECK(r.reward == doctest::Approx(std::pow(gamma, 4) / (1.0 - gamma)).epsilon(1e-12));

  const double stay[] = {1.0, 0.0};
  auto z = oracle::exact_policy_eval(make_chain_cmdp(10, 0.1), TabularPolicy::constant(10, stay), gamma);
  CHECK(z.costs[0] == 0.0);
  CHECK(z.costs[1] == 0.0);
}

TEST_CASE("tabular env adapter") {
  TabularEnv env(make_chain_cmdp(6, 0.0), 0.99, 3);
  CHECK(env.spec().observation_dim == 6);
  CHECK(env.spec().n_groups() == 2);
  for (int i = 0; i < 2; ++i) CHECK(env.action_index(env.action_value(i)) == i);
  CHECK(env.action_index(-50.0) == 0);
  CHECK(env.action_index(50.0) == 1);
  auto o = env.reset(3);
  CHECK(o[0] == 1.0);
  const double adv[] = {env.action_value(kChainAdvance)};
  auto r = env.step(adv);
  CHECK(env.state() == 1);
  CHECK(r.costs[0] == 1.0);
  CHECK(r.violated[0] == 1);
  CHECK_FALSE(r.truncated);
  env.step(adv);
  CHECK(env.step(adv).truncated);
  CHECK_THROWS_AS(TabularEnv(make_chain_cmdp(6, 0.0), 0.99, 3, {0.0}), std::invalid_argument);
}

TEST_CASE("spec validation") {
  CmdpSpec s = PointMassConfig{}.spec();
  CHECK(s.n_groups() == 2);
  auto g = s.group_thresholds();
  CHECK(g.size() == 2);
  s.discount = 1.0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = PointMassConfig{}.spec();
  s.cost_group_map = {0, 0, 2, 2, 2};
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = PointMassConfig{}.spec();
  s.thresholds[1] = -0.1;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}
