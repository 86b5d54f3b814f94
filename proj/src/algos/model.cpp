#include "cmdp/algos/model.hpp"

#include <cmath>
#include <stdexcept>

namespace cmdp {
namespace {

MlpArch make_arch(int in, const std::vector<int>& hidden, int out, Activation act, OutputHead head) {
  MlpArch a;
  a.sizes.push_back(in);
  a.sizes.insert(a.sizes.end(), hidden.begin(), hidden.end());
  a.sizes.push_back(out);
  a.activation = act;
  a.head = head;
  return a;
}

}  // namespace

ActorCritic::ActorCritic(int observation_dim, int action_dim, int n_groups, const ModelConfig& cfg,
                         std::uint64_t seed)
    : observation_dim_(observation_dim), action_dim_(action_dim), n_groups_(n_groups) {
  Rng rng(seed);
  policy_net_ = Mlp(make_arch(observation_dim, cfg.hidden, action_dim, cfg.activation, OutputHead::kLinear),
                    "policy");
  policy_net_.declare(policy_params_);
  log_std_segment_ = policy_params_.add_segment("policy.log_std", 1, action_dim);
  policy_net_.initialize(policy_params_, rng, 0.01);
  policy_params_.segment(log_std_segment_).setConstant(cfg.log_std_init);

  for (int h = 0; h < 1 + n_groups; ++h) {
    const OutputHead head = h == 0 ? OutputHead::kLinear : cfg.cost_head;
    const std::string prefix = h == 0 ? "reward_critic" : "cost_critic" + std::to_string(h - 1);
    critics_.emplace_back(make_arch(observation_dim, cfg.hidden, 1, cfg.activation, head), prefix);
    critic_params_.emplace_back();
    critics_.back().declare(critic_params_.back());
    critics_.back().initialize(critic_params_.back(), rng, 1.0);
  }
}

GaussianPolicyOutput ActorCritic::policy_output(Tape& tape, const ParamVector& theta,
                                                Var observations) const {
  return {policy_net_.forward(tape, theta, observations), tape.parameter(theta, log_std_segment_)};
}

Var ActorCritic::critic_output(Tape& tape, int head, const ParamVector& params, Var observations) const {
  return critics_.at(static_cast<std::size_t>(head)).forward(tape, params, observations);
}

ParamVector ActorCritic::pack() const {
  ParamVector out;
  auto append = [&out](const ParamVector& src) {
    for (std::size_t i = 0; i < src.segments().size(); ++i) {
      const Segment& seg = src.segments()[i];
      out.segment(out.add_segment(seg.name, seg.rows, seg.cols)) = src.segment(i);
    }
  };
  append(policy_params_);
  for (const auto& c : critic_params_) append(c);
  return out;
}

void ActorCritic::unpack(const ParamVector& packed) {
  std::size_t copied = 0;
  auto fill = [&](ParamVector& dst) {
    for (std::size_t i = 0; i < dst.segments().size(); ++i) {
      const Segment& seg = dst.segments()[i];
      std::size_t j = 0;
      try {
        j = packed.find(seg.name);
      } catch (const std::out_of_range&) {
        throw std::invalid_argument("checkpoint lacks segment " + seg.name);
      }
      const Segment& src = packed.segments()[j];
      if (src.rows != seg.rows || src.cols != seg.cols) {
        throw std::invalid_argument("checkpoint segment " + seg.name + " has the wrong shape");
      }
      dst.segment(i) = packed.segment(j);
      ++copied;
    }
  };
  fill(policy_params_);
  for (auto& c : critic_params_) fill(c);
  if (copied != packed.segments().size()) throw std::invalid_argument("checkpoint has extra segments");
}

Matrix ActorCritic::mean_action(const Matrix& observations) const {
  return policy_net_.forward(policy_params_, observations);
}

ActionBatch ActorCritic::sample(const Matrix& observations, Rng& rng) const {
  Tape tape;
  const auto out = policy_output(tape, policy_params_, tape.constant(observations));
  const Matrix& mu = out.mean.value();
  const Matrix& log_std = out.log_std.value();
  ActionBatch b;
  b.actions.resize(mu.rows(), mu.cols());
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index r = 0; r < mu.rows(); ++r) {
    for (Eigen::Index c = 0; c < mu.cols(); ++c) {
      b.actions(r, c) = mu(r, c) + std::exp(log_std(0, c)) * normal(rng);
    }
  }
  const Matrix lp = gaussian_logprob(out, b.actions).value();
  b.log_probs.assign(lp.data(), lp.data() + lp.size());
  return b;
}

Matrix ActorCritic::values(const Matrix& observations) const {
  Matrix out(observations.rows(), n_critics());
  for (int h = 0; h < n_critics(); ++h) {
    out.col(h) = critics_[static_cast<std::size_t>(h)].forward(critic_params_[static_cast<std::size_t>(h)],
                                                               observations);
  }
  return out;
}

}  // namespace cmdp
