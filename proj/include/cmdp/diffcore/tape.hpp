#pragma once

#include <cstdint>
#include <vector>

#include "cmdp/diffcore/param_vector.hpp"

namespace cmdp {

class Tape;

// Handle to a node on a Tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  double scalar() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }

  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

enum class Op : std::uint8_t {
  kConst,
  kParam,
  kAdd,
  kSub,
  kMul,
  kNeg,
  kScale,
  kAddScalar,
  kMatMul,
  kElu,
  kTanh,
  kExp,
  kLog,
  kSoftplus,
  kMin,
  kMax,
  kClip,
  kSquare,
  kMean,
  kSum,
  kRowSum,
};

// Reverse-mode expression tape over dense matrices. Nodes are appended in
// evaluation order, so every node's inputs precede it and a single reverse
// sweep visits each node once.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var constant(double value);

  // Leaf bound to one segment of `params`; grad() routes its adjoint back to
  // that segment. The tape copies the current values.
  Var parameter(const ParamVector& params, std::size_t segment);

  std::size_t size() const { return nodes_.size(); }
  const Matrix& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }

  Var record(Op op, Matrix value, int a, int b = -1, double p0 = 0.0, double p1 = 0.0);

 private:
  struct Node {
    Op op;
    int a = -1;
    int b = -1;
    double p0 = 0.0;
    double p1 = 0.0;
    Matrix value;
    const ParamVector* source = nullptr;
    std::size_t segment = 0;
  };

  std::vector<Node> nodes_;

  friend ParamVector grad(const Tape& tape, Var root, const ParamVector& params);
};

// d(root)/d(params) for a scalar root. Segments of `params` that never
// appear on the tape get exact zeros. Throws ShapeError for a non-scalar root
// and NumericError if a non-finite value shows up in the backward sweep.
ParamVector grad(const Tape& tape, Var root, const ParamVector& params);

Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);  // elementwise
Var operator-(Var a);
Var operator*(Var a, double c);
Var operator*(double c, Var a);
Var operator+(Var a, double c);
Var operator+(double c, Var a);
Var operator-(Var a, double c);
Var operator-(double c, Var a);

// Binary elementwise ops broadcast 1x1, 1xN and Nx1 operands.
Var matmul(Var a, Var b);
Var elu(Var x);
Var tanh(Var x);
Var exp(Var x);
Var log(Var x);
Var softplus(Var x);
// Subgradient convention: on ties the gradient goes to the first argument.
Var min(Var a, Var b);
Var max(Var a, Var b);
Var clip(Var x, double lo, double hi);
Var square(Var x);
Var mean(Var x);
Var sum(Var x);
Var row_sum(Var x);

}  // namespace cmdp
