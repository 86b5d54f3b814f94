#include "cmdp/diffcore/nn.hpp"

#include <cmath>
#include <stdexcept>

#include "cmdp/error.hpp"

namespace cmdp {

Activation parse_activation(std::string_view name) {
  if (name == "elu") return Activation::kElu;
  if (name == "tanh") return Activation::kTanh;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

OutputHead parse_output_head(std::string_view name) {
  if (name == "linear") return OutputHead::kLinear;
  if (name == "softplus") return OutputHead::kSoftplus;
  throw std::invalid_argument("unknown output head '" + std::string(name) + "'");
}

std::string_view to_string(Activation a) { return a == Activation::kElu ? "elu" : "tanh"; }
std::string_view to_string(OutputHead h) { return h == OutputHead::kLinear ? "linear" : "softplus"; }

Mlp::Mlp(MlpArch arch, std::string prefix) : arch_(std::move(arch)), prefix_(std::move(prefix)) {
  if (arch_.sizes.size() < 2) throw ShapeError("MLP needs at least input and output sizes");
  for (int s : arch_.sizes) {
    if (s <= 0) throw ShapeError("MLP layer sizes must be positive");
  }
}

void Mlp::declare(ParamVector& params) {
  weight_segments_.clear();
  bias_segments_.clear();
  for (std::size_t k = 0; k + 1 < arch_.sizes.size(); ++k) {
    weight_segments_.push_back(params.add_segment(prefix_ + ".w" + std::to_string(k),
                                                  arch_.sizes[k], arch_.sizes[k + 1]));
    bias_segments_.push_back(
        params.add_segment(prefix_ + ".b" + std::to_string(k), 1, arch_.sizes[k + 1]));
  }
}

void Mlp::initialize(ParamVector& params, std::mt19937_64& rng, double output_gain) const {
  const std::size_t layers = weight_segments_.size();
  for (std::size_t k = 0; k < layers; ++k) {
    auto w = params.segment(weight_segments_[k]);
    const double scale = (k + 1 == layers ? output_gain : 1.0) /
                         std::sqrt(static_cast<double>(arch_.sizes[k]));
    std::normal_distribution<double> normal(0.0, scale);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = normal(rng);
    }
    params.segment(bias_segments_[k]).setZero();
  }
}

Var Mlp::forward(Tape& tape, const ParamVector& params, Var input) const {
  if (weight_segments_.empty()) throw std::logic_error("Mlp::forward before declare()");
  if (input.cols() != arch_.input_dim()) {
    throw ShapeError("MLP input has " + std::to_string(input.cols()) + " columns, expected " +
                     std::to_string(arch_.input_dim()));
  }
  Var h = input;
  const std::size_t layers = weight_segments_.size();
  for (std::size_t k = 0; k < layers; ++k) {
    h = matmul(h, tape.parameter(params, weight_segments_[k])) +
        tape.parameter(params, bias_segments_[k]);
    if (k + 1 < layers) {
      h = arch_.activation == Activation::kElu ? elu(h) : tanh(h);
    }
  }
  if (arch_.head == OutputHead::kSoftplus) h = softplus(h);
  return h;
}

Matrix Mlp::forward(const ParamVector& params, const Matrix& input) const {
  Tape tape;
  return forward(tape, params, tape.constant(input)).value();
}

}  // namespace cmdp
