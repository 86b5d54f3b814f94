#include <doctest.h>

#include <cmath>
#include <vector>

#include "cmdp/envs/tabular.hpp"
#include "cmdp/error.hpp"
#include "cmdp/oracle/oracle.hpp"

using namespace cmdp;

namespace {

// Two states, two actions, random tables; every row stochastic.
TabularCmdp random_cmdp(int n, int m, std::uint64_t seed) {
  Rng rng(seed);
  TabularCmdp c;
  c.n_states = n;
  c.n_actions = m;
  const auto size = static_cast<std::size_t>(n * m * n);
  c.transition.resize(size);
  c.reward.resize(size);
  c.cost.assign(2, std::vector<double>(size));
  for (int s = 0; s < n; ++s) {
    for (int a = 0; a < m; ++a) {
      double total = 0.0;
      for (int s2 = 0; s2 < n; ++s2) total += c.transition[c.index(s, a, s2)] = uniform01(rng) + 0.05;
      for (int s2 = 0; s2 < n; ++s2) c.transition[c.index(s, a, s2)] /= total;
      double fix = 1.0;
      for (int s2 = 0; s2 + 1 < n; ++s2) fix -= c.transition[c.index(s, a, s2)];
      c.transition[c.index(s, a, n - 1)] = fix;
    }
  }
  for (std::size_t i = 0; i < size; ++i) {
    c.reward[i] = 2.0 * uniform01(rng) - 1.0;
    c.cost[0][i] = uniform01(rng);
    c.cost[1][i] = uniform01(rng) < 0.3 ? 1.0 : 0.0;
  }
  c.initial_dist.assign(static_cast<std::size_t>(n), 1.0 / n);
  c.initial_dist.back() = 1.0 - (n - 1) * (1.0 / n);
  c.validate();
  return c;
}

TabularPolicy random_policy(int n, int m, std::uint64_t seed) {
  Rng rng(seed);
  TabularPolicy p;
  p.n_states = n;
  p.n_actions = m;
  for (int s = 0; s < n; ++s) {
    std::vector<double> row(static_cast<std::size_t>(m));
    double total = 0.0;
    for (auto& x : row) total += x = uniform01(rng) + 0.1;
    double rest = 1.0;
    for (std::size_t a = 0; a + 1 < row.size(); ++a) rest -= row[a] /= total;
    row.back() = rest;
    p.probs.insert(p.probs.end(), row.begin(), row.end());
  }
  p.validate();
  return p;
}

}  // namespace

TEST_CASE("exact evaluation examples") {
  TabularCmdp chain = make_chain_cmdp(5, 0.0);
  const double advance[] = {0.0, 1.0};
  const auto pol = TabularPolicy::constant(5, advance);
  auto r = oracle::exact_policy_eval(chain, pol, 0.9);
  CHECK(r.reward == doctest::Approx(6.561).epsilon(1e-12));

  TabularCmdp zero = chain;
  std::fill(zero.reward.begin(), zero.reward.end(), 0.0);
  CHECK(oracle::exact_policy_eval(zero, pol, 0.9).reward == 0.0);

  TabularCmdp start_end = chain;
  start_end.initial_dist = {0, 0, 0, 0, 1};
  CHECK(oracle::exact_policy_eval(start_end, pol, 0.9).reward == doctest::Approx(10.0).epsilon(1e-12));

  const double bad[] = {0.5, 0.4};
  CHECK_THROWS_AS(TabularPolicy::constant(5, bad), std::invalid_argument);
  const double three[] = {0.2, 0.3, 0.5};
  CHECK_THROWS_AS(oracle::exact_policy_eval(chain, TabularPolicy::constant(5, three), 0.9), std::invalid_argument);
}

TEST_CASE("brute force examples") {
  TabularCmdp chain = make_chain_cmdp(5, 0.0);
  const double advance[] = {0.0, 1.0};
  const auto pol = TabularPolicy::constant(5, advance);
  CHECK(oracle::brute_force_return(chain, pol, 0.9, 0).reward == 0.0);
  // Rewards start at step 4: only step 4 of the first five counts.
  auto b = oracle::brute_force_return(chain, pol, 0.9, 5);
  CHECK(std::abs(b.reward - std::pow(0.9, 4)) < 1e-12);
  CHECK_THROWS_AS(oracle::brute_force_return(chain, pol, 0.9, 40), std::length_error);
}

TEST_CASE("exact and enumerated returns agree within the truncation bound") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto c = random_cmdp(3, 2, seed);
    const auto p = random_policy(3, 2, seed + 100);
    const double gamma = 0.8;
    const int horizon = 8;
    const auto exact = oracle::exact_policy_eval(c, p, gamma);
    const auto enumerated = oracle::brute_force_return(c, p, gamma, horizon);
    const double bound = std::pow(gamma, horizon) * 1.0 / (1.0 - gamma);
    CHECK(std::abs(exact.reward - enumerated.reward) <= bound);
    for (std::size_t i = 0; i < 2; ++i) CHECK(std::abs(exact.costs[i] - enumerated.costs[i]) <= bound);
  }
}

TEST_CASE("finite differences") {
  ParamVector p;
  p.add_segment("theta", 1, 2);
  p[0] = 1.0;
  p[1] = 2.0;
  auto quad = [](const ParamVector& x) { return x[0] * x[0] + x[1] * x[1]; };
  auto g = oracle::finite_diff_grad(quad, p);
  CHECK(std::abs(g[0] - 2.0) < 1e-8);
  CHECK(std::abs(g[1] - 4.0) < 1e-8);

  auto lin = [](const ParamVector& x) { return 3.0 * x[0] - 0.5 * x[1] + 7.0; };
  for (double h : {1e-3, 0.25, 2.0}) {
    auto gl = oracle::finite_diff_grad(lin, p, h);
    CHECK(gl[0] == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(gl[1] == doctest::Approx(-0.5).epsilon(1e-12));
  }

  auto blowup = [](const ParamVector& x) { return std::log(x[0] - 1.0); };
  CHECK_THROWS_AS(oracle::finite_diff_grad(blowup, p), NumericError);
}
