#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "cmdp/diffcore/param_vector.hpp"
#include "cmdp/diffcore/tape.hpp"

namespace cmdp {

enum class Activation { kElu, kTanh };
enum class OutputHead { kLinear, kSoftplus };

Activation parse_activation(std::string_view name);
OutputHead parse_output_head(std::string_view name);
std::string_view to_string(Activation a);
std::string_view to_string(OutputHead h);

struct MlpArch {
  // Layer widths including input and output, e.g. {10, 64, 64, 2}.
  std::vector<int> sizes;
  Activation activation = Activation::kElu;
  OutputHead head = OutputHead::kLinear;

  int input_dim() const { return sizes.front(); }
  int output_dim() const { return sizes.back(); }
};

// Fully connected network y = head(W_L ... act(W_1 x + b_1) ... + b_L) on
// row-major batches (one sample per row). Parameters live in a ParamVector
// under "<prefix>.w<k>" and "<prefix>.b<k>" segments.
class Mlp {
 public:
  Mlp() = default;
  Mlp(MlpArch arch, std::string prefix);

  const MlpArch& arch() const { return arch_; }
  const std::string& prefix() const { return prefix_; }

  // Adds this network's segments to `params` and remembers their indices.
  void declare(ParamVector& params);

  // LeCun-normal weights scaled by `output_gain` on the last layer; zero biases.
  void initialize(ParamVector& params, std::mt19937_64& rng, double output_gain) const;

  Var forward(Tape& tape, const ParamVector& params, Var input) const;
  Matrix forward(const ParamVector& params, const Matrix& input) const;

 private:
  MlpArch arch_;
  std::string prefix_;
  std::vector<std::size_t> weight_segments_;
  std::vector<std::size_t> bias_segments_;
};

}  // namespace cmdp
