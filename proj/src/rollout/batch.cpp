#include "cmdp/rollout/batch.hpp"

#include <cmath>
#include <stdexcept>

#include "cmdp/error.hpp"

namespace cmdp {
namespace {

void set_row(Matrix& m, std::size_t r, const std::vector<double>& v) {
  for (std::size_t c = 0; c < v.size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v[c];
}

bool all_finite(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace

EnvPool::EnvPool(std::vector<std::unique_ptr<Env>> envs, std::uint64_t seed) : envs_(std::move(envs)) {
  if (envs_.empty()) throw std::invalid_argument("EnvPool needs at least one environment");
  const auto& s = envs_.front()->spec();
  observations_.resize(static_cast<Eigen::Index>(envs_.size()), s.observation_dim);
  fresh_.assign(envs_.size(), 1);
  for (std::size_t e = 0; e < envs_.size(); ++e) {
    if (envs_[e]->spec().observation_dim != s.observation_dim ||
        envs_[e]->spec().action_dim != s.action_dim ||
        envs_[e]->spec().n_constraints() != s.n_constraints()) {
      throw ShapeError("environments in a pool must share dimensions");
    }
    set_row(observations_, e, envs_[e]->reset(derive_seed(seed, e)));
  }
}

RolloutBatch collect(EnvPool& pool, const RolloutPolicy& policy, int steps_per_env, Rng& rng) {
  if (steps_per_env <= 0) throw std::invalid_argument("steps_per_env must be positive");
  const CmdpSpec& spec = pool.spec();
  const int E = pool.size();
  const int n = spec.n_constraints();
  const int G = spec.n_groups();
  const int heads = 1 + G;

  RolloutBatch b;
  b.steps = steps_per_env;
  b.envs = E;
  b.n_constraints = n;
  b.n_groups = G;
  b.cost_group_map = spec.cost_group_map;
  const auto N = static_cast<Eigen::Index>(b.size());
  b.observations.resize(N, spec.observation_dim);
  b.actions.resize(N, spec.action_dim);
  b.log_prob_old.resize(b.size());
  b.rewards.resize(b.size());
  b.costs.resize(N, n);
  b.signals = Matrix::Zero(N, heads);
  b.excess.resize(N, n);
  b.violated.assign(b.size() * static_cast<std::size_t>(n), 0);
  b.values.resize(N, heads);
  b.next_values.resize(N, heads);
  b.terminated.assign(b.size(), 0);
  b.truncated.assign(b.size(), 0);
  b.episode_start.assign(b.size(), 0);

  Matrix current_values = policy.values(pool.observations_);
  Matrix next_obs(E, spec.observation_dim);
  std::vector<int> reset_rows;

  for (int t = 0; t < steps_per_env; ++t) {
    if (!pool.observations_.allFinite()) throw NumericError("non-finite observation during collection");
    ActionBatch act = policy.sample(pool.observations_, rng);
    if (act.actions.rows() != E || act.actions.cols() != spec.action_dim) {
      throw ShapeError("policy action batch has the wrong shape");
    }
    if (!act.actions.allFinite()) throw NumericError("non-finite action during collection");

    reset_rows.clear();
    for (int e = 0; e < E; ++e) {
      const std::size_t r = b.row(t, e);
      const auto ri = static_cast<Eigen::Index>(r);
      b.observations.row(ri) = pool.observations_.row(e);
      b.actions.row(ri) = act.actions.row(e);
      b.log_prob_old[r] = act.log_probs[static_cast<std::size_t>(e)];
      b.values.row(ri) = current_values.row(e);
      b.episode_start[r] = pool.fresh_[static_cast<std::size_t>(e)];
      pool.fresh_[static_cast<std::size_t>(e)] = 0;

      const Eigen::RowVectorXd a = act.actions.row(e);
      StepResult res = pool.env(e).step(std::span<const double>(a.data(), static_cast<std::size_t>(a.size())));
      if (!all_finite(res.next_observation)) throw NumericError("non-finite observation during collection");
      b.rewards[r] = res.reward;
      b.signals(ri, 0) = res.reward;
      for (int i = 0; i < n; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        b.costs(ri, i) = res.costs[ii];
        b.excess(ri, i) = res.excess[ii];
        b.violated[r * static_cast<std::size_t>(n) + ii] = res.violated[ii];
        b.signals(ri, 1 + spec.cost_group_map[ii]) += res.costs[ii];
      }
      b.terminated[r] = res.terminated ? 1 : 0;
      b.truncated[r] = res.truncated ? 1 : 0;
      set_row(next_obs, static_cast<std::size_t>(e), res.next_observation);
      if (res.terminated || res.truncated) {
        set_row(pool.observations_, static_cast<std::size_t>(e), pool.env(e).reset());
        pool.fresh_[static_cast<std::size_t>(e)] = 1;
        reset_rows.push_back(e);
      } else {
        pool.observations_.row(e) = next_obs.row(e);
      }
    }

    const Matrix nv = policy.values(next_obs);
    for (int e = 0; e < E; ++e) b.next_values.row(static_cast<Eigen::Index>(b.row(t, e))) = nv.row(e);
    current_values = nv;
    if (!reset_rows.empty()) {
      Matrix fresh_obs(static_cast<Eigen::Index>(reset_rows.size()), spec.observation_dim);
      for (std::size_t k = 0; k < reset_rows.size(); ++k) {
        fresh_obs.row(static_cast<Eigen::Index>(k)) = pool.observations_.row(reset_rows[k]);
      }
      const Matrix fv = policy.values(fresh_obs);
      for (std::size_t k = 0; k < reset_rows.size(); ++k) {
        current_values.row(reset_rows[k]) = fv.row(static_cast<Eigen::Index>(k));
      }
    }
    for (int e = 0; e < E; ++e) {
      if (b.terminated[b.row(t, e)]) {
        b.next_values.row(static_cast<Eigen::Index>(b.row(t, e))).setConstant(std::nan(""));
      }
    }
  }
  return b;
}

void compute_advantages(RolloutBatch& b, double gamma, double lambda) {
  const int heads = 1 + b.n_groups;
  const auto N = static_cast<Eigen::Index>(b.size());
  b.advantages.resize(N, heads);
  b.returns.resize(N, heads);
  b.normalized_advantages.resize(N, heads);
  b.norm_stats.assign(static_cast<std::size_t>(heads), {});

  const auto T = static_cast<std::size_t>(b.steps);
  std::vector<double> v(T), nv(T), sig(T);
  std::vector<std::uint8_t> term(T), end(T);
  for (int h = 0; h < heads; ++h) {
    for (int e = 0; e < b.envs; ++e) {
      for (int t = 0; t < b.steps; ++t) {
        const std::size_t r = b.row(t, e);
        const auto ri = static_cast<Eigen::Index>(r);
        const auto ti = static_cast<std::size_t>(t);
        v[ti] = b.values(ri, h);
        nv[ti] = b.next_values(ri, h);
        sig[ti] = b.signals(ri, h);
        term[ti] = b.terminated[r];
        end[ti] = b.episode_end(r) ? 1 : 0;
      }
      const auto adv = gae(v, nv, sig, gamma, lambda, term, end);
      for (int t = 0; t < b.steps; ++t) {
        const auto ri = static_cast<Eigen::Index>(b.row(t, e));
        b.advantages(ri, h) = adv[static_cast<std::size_t>(t)];
        b.returns(ri, h) = adv[static_cast<std::size_t>(t)] + b.values(ri, h);
      }
    }
    const Eigen::VectorXd col = b.advantages.col(h);
    const auto norm = normalize_advantages(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())));
    for (Eigen::Index r = 0; r < N; ++r) b.normalized_advantages(r, h) = norm.values[static_cast<std::size_t>(r)];
    b.norm_stats[static_cast<std::size_t>(h)] = {norm.mean, norm.std, norm.degenerate};
  }
}

}  // namespace cmdp
