#include "cmdp/diffcore/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cmdp/diffcore/activations.hpp"
#include "cmdp/error.hpp"

namespace cmdp {
namespace {

Eigen::Index broadcast_dim(Eigen::Index a, Eigen::Index b) {
  if (a == b) return a;
  if (a == 1) return b;
  if (b == 1) return a;
  throw ShapeError("incompatible shapes for broadcast: " + std::to_string(a) + " vs " +
                   std::to_string(b));
}

// Returns `m` expanded to (rows x cols). `storage` holds the copy when needed.
const Matrix& expand(const Matrix& m, Eigen::Index rows, Eigen::Index cols, Matrix& storage) {
  if (m.rows() == rows && m.cols() == cols) return m;
  if (m.rows() == 1 && m.cols() == 1) {
    storage = Matrix::Constant(rows, cols, m(0, 0));
  } else if (m.rows() == 1) {
    storage = m.replicate(rows, 1);
  } else if (m.cols() == 1) {
    storage = m.replicate(1, cols);
  } else {
    throw ShapeError("cannot expand matrix");
  }
  return storage;
}

// Sums a full-size adjoint back down to an operand's (rows x cols) shape.
Matrix reduce_to(const Matrix& g, Eigen::Index rows, Eigen::Index cols) {
  if (g.rows() == rows && g.cols() == cols) return g;
  Matrix out(rows, cols);
  if (rows == 1 && cols == 1) {
    out(0, 0) = g.sum();
  } else if (rows == 1) {
    out = g.colwise().sum();
  } else {
    out = g.rowwise().sum();
  }
  return out;
}

Tape& same_tape(Var a, Var b) {
  if (!a.valid() || !b.valid() || a.tape() != b.tape()) {
    throw std::invalid_argument("operands belong to different tapes");
  }
  return *a.tape();
}

Tape& tape_of(Var a) {
  if (!a.valid()) throw std::invalid_argument("invalid Var");
  return *a.tape();
}

template <class F>
Var binary(Op op, Var a, Var b, F f) {
  Tape& t = same_tape(a, b);
  const Matrix& va = a.value();
  const Matrix& vb = b.value();
  const Eigen::Index rows = broadcast_dim(va.rows(), vb.rows());
  const Eigen::Index cols = broadcast_dim(va.cols(), vb.cols());
  Matrix sa, sb;
  const Matrix& ea = expand(va, rows, cols, sa);
  const Matrix& eb = expand(vb, rows, cols, sb);
  Matrix out = f(ea, eb);
  return t.record(op, std::move(out), a.id(), b.id());
}

template <class F>
Var unary(Op op, Var a, F f, double p0 = 0.0, double p1 = 0.0) {
  Tape& t = tape_of(a);
  Matrix out = f(a.value());
  return t.record(op, std::move(out), a.id(), -1, p0, p1);
}

}  // namespace

const Matrix& Var::value() const { return tape_->value(id_); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) throw ShapeError("Var is not a scalar");
  return v(0, 0);
}

Var Tape::constant(Matrix value) { return record(Op::kConst, std::move(value), -1); }

Var Tape::constant(double value) { return record(Op::kConst, Matrix::Constant(1, 1, value), -1); }

Var Tape::parameter(const ParamVector& params, std::size_t segment) {
  Var v = record(Op::kParam, Matrix(params.segment(segment)), -1);
  Node& n = nodes_.back();
  n.source = &params;
  n.segment = segment;
  return v;
}

Var Tape::record(Op op, Matrix value, int a, int b, double p0, double p1) {
  Node n;
  n.op = op;
  n.a = a;
  n.b = b;
  n.p0 = p0;
  n.p1 = p1;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

ParamVector grad(const Tape& tape, Var root, const ParamVector& params) {
  if (root.tape() != &tape) throw std::invalid_argument("root does not belong to tape");
  const Matrix& rv = root.value();
  if (rv.rows() != 1 || rv.cols() != 1) throw ShapeError("grad requires a scalar root");
  if (!std::isfinite(rv(0, 0))) throw NumericError("non-finite objective value");

  const auto& nodes = tape.nodes_;
  std::vector<Matrix> adj(static_cast<std::size_t>(root.id()) + 1);
  std::vector<char> touched(adj.size(), 0);
  auto accumulate = [&](int id, const Matrix& g) {
    auto& slot = adj[static_cast<std::size_t>(id)];
    if (!touched[static_cast<std::size_t>(id)]) {
      slot = g;
      touched[static_cast<std::size_t>(id)] = 1;
    } else {
      slot += g;
    }
  };
  accumulate(root.id(), Matrix::Ones(1, 1));

  ParamVector out = params.zeros_like();
  for (int i = root.id(); i >= 0; --i) {
    const auto idx = static_cast<std::size_t>(i);
    if (!touched[idx]) continue;
    const Matrix& g = adj[idx];
    if (!g.allFinite()) throw NumericError("non-finite adjoint in backward pass");
    const auto& n = nodes[idx];
    const Matrix& y = n.value;
    switch (n.op) {
      case Op::kConst:
        break;
      case Op::kParam:
        if (n.source == &params) out.segment(n.segment) += g;
        break;
      case Op::kAdd:
      case Op::kSub: {
        const Matrix& a = nodes[static_cast<std::size_t>(n.a)].value;
        const Matrix& b = nodes[static_cast<std::size_t>(n.b)].value;
        accumulate(n.a, reduce_to(g, a.rows(), a.cols()));
        Matrix gb = reduce_to(g, b.rows(), b.cols());
        if (n.op == Op::kSub) gb = -gb;
        accumulate(n.b, gb);
        break;
      }
      case Op::kMul: {
        const Matrix& a = nodes[static_cast<std::size_t>(n.a)].value;
        const Matrix& b = nodes[static_cast<std::size_t>(n.b)].value;
        Matrix sa, sb;
        const Matrix& ea = expand(a, y.rows(), y.cols(), sa);
        const Matrix& eb = expand(b, y.rows(), y.cols(), sb);
        accumulate(n.a, reduce_to(g.cwiseProduct(eb), a.rows(), a.cols()));
        accumulate(n.b, reduce_to(g.cwiseProduct(ea), b.rows(), b.cols()));
        break;
      }
      case Op::kNeg:
        accumulate(n.a, -g);
        break;
      case Op::kScale:
        accumulate(n.a, n.p0 * g);
        break;
      case Op::kAddScalar:
        accumulate(n.a, g);
        break;
      case Op::kMatMul: {
        const Matrix& a = nodes[static_cast<std::size_t>(n.a)].value;
        const Matrix& b = nodes[static_cast<std::size_t>(n.b)].value;
        accumulate(n.a, g * b.transpose());
        accumulate(n.b, a.transpose() * g);
        break;
      }
      case Op::kElu: {
        const Matrix& x = nodes[static_cast<std::size_t>(n.a)].value;
        Matrix d = x.unaryExpr([](double v) { return v > 0.0 ? 1.0 : std::exp(v); });
        accumulate(n.a, g.cwiseProduct(d));
        break;
      }
      case Op::kTanh:
        accumulate(n.a, g.cwiseProduct((1.0 - y.array().square()).matrix()));
        break;
      case Op::kExp:
        accumulate(n.a, g.cwiseProduct(y));
        break;
      case Op::kLog: {
        const Matrix& x = nodes[static_cast<std::size_t>(n.a)].value;
        accumulate(n.a, g.cwiseQuotient(x));
        break;
      }
      case Op::kSoftplus: {
        const Matrix& x = nodes[static_cast<std::size_t>(n.a)].value;
        accumulate(n.a, g.cwiseProduct(x.unaryExpr([](double v) { return sigmoid(v); })));
        break;
      }
      case Op::kMin:
      case Op::kMax: {
        const Matrix& a = nodes[static_cast<std::size_t>(n.a)].value;
        const Matrix& b = nodes[static_cast<std::size_t>(n.b)].value;
        Matrix sa, sb;
        const Matrix& ea = expand(a, y.rows(), y.cols(), sa);
        const Matrix& eb = expand(b, y.rows(), y.cols(), sb);
        Matrix ga = Matrix::Zero(y.rows(), y.cols());
        Matrix gb = Matrix::Zero(y.rows(), y.cols());
        bool any_a = false;
        bool any_b = false;
        const bool is_min = n.op == Op::kMin;
        for (Eigen::Index r = 0; r < y.rows(); ++r) {
          for (Eigen::Index c = 0; c < y.cols(); ++c) {
            const bool first = is_min ? ea(r, c) <= eb(r, c) : ea(r, c) >= eb(r, c);
            (first ? ga : gb)(r, c) = g(r, c);
            (first ? any_a : any_b) = true;
          }
        }
        // An operand that never wins receives no adjoint at all, so inactive
        // branches leave the rest of the graph untouched.
        if (any_a) accumulate(n.a, reduce_to(ga, a.rows(), a.cols()));
        if (any_b) accumulate(n.b, reduce_to(gb, b.rows(), b.cols()));
        break;
      }
      case Op::kClip: {
        const Matrix& x = nodes[static_cast<std::size_t>(n.a)].value;
        const double lo = n.p0;
        const double hi = n.p1;
        Matrix d = x.unaryExpr([lo, hi](double v) { return (v >= lo && v <= hi) ? 1.0 : 0.0; });
        accumulate(n.a, g.cwiseProduct(d));
        break;
      }
      case Op::kSquare: {
        const Matrix& x = nodes[static_cast<std::size_t>(n.a)].value;
        accumulate(n.a, 2.0 * g.cwiseProduct(x));
        break;
      }
      case Op::kMean: {
        const Matrix& x = nodes[static_cast<std::size_t>(n.a)].value;
        accumulate(n.a, Matrix::Constant(x.rows(), x.cols(), g(0, 0) / static_cast<double>(x.size())));
        break;
      }
      case Op::kSum: {
        const Matrix& x = nodes[static_cast<std::size_t>(n.a)].value;
        accumulate(n.a, Matrix::Constant(x.rows(), x.cols(), g(0, 0)));
        break;
      }
      case Op::kRowSum: {
        const Matrix& x = nodes[static_cast<std::size_t>(n.a)].value;
        accumulate(n.a, g.replicate(1, x.cols()));
        break;
      }
    }
  }
  return out;
}

Var operator+(Var a, Var b) {
  return binary(Op::kAdd, a, b, [](const Matrix& x, const Matrix& y) { return Matrix(x + y); });
}

Var operator-(Var a, Var b) {
  return binary(Op::kSub, a, b, [](const Matrix& x, const Matrix& y) { return Matrix(x - y); });
}

Var operator*(Var a, Var b) {
  return binary(Op::kMul, a, b,
                [](const Matrix& x, const Matrix& y) { return Matrix(x.cwiseProduct(y)); });
}

Var operator-(Var a) {
  return unary(Op::kNeg, a, [](const Matrix& x) { return Matrix(-x); });
}

Var operator*(Var a, double c) {
  return unary(Op::kScale, a, [c](const Matrix& x) { return Matrix(c * x); }, c);
}

Var operator*(double c, Var a) { return a * c; }

Var operator+(Var a, double c) {
  return unary(Op::kAddScalar, a, [c](const Matrix& x) { return Matrix(x.array() + c); }, c);
}

Var operator+(double c, Var a) { return a + c; }
Var operator-(Var a, double c) { return a + (-c); }
Var operator-(double c, Var a) { return (-a) + c; }

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Matrix& va = a.value();
  const Matrix& vb = b.value();
  if (va.cols() != vb.rows()) {
    throw ShapeError("matmul shape mismatch: " + std::to_string(va.cols()) + " vs " +
                     std::to_string(vb.rows()));
  }
  Matrix out = va * vb;
  return t.record(Op::kMatMul, std::move(out), a.id(), b.id());
}

Var elu(Var x) {
  return unary(Op::kElu, x, [](const Matrix& m) {
    return Matrix(m.unaryExpr([](double v) { return v > 0.0 ? v : std::expm1(v); }));
  });
}

Var tanh(Var x) {
  return unary(Op::kTanh, x, [](const Matrix& m) { return Matrix(m.array().tanh()); });
}

Var exp(Var x) {
  return unary(Op::kExp, x, [](const Matrix& m) { return Matrix(m.array().exp()); });
}

Var log(Var x) {
  return unary(Op::kLog, x, [](const Matrix& m) { return Matrix(m.array().log()); });
}

Var softplus(Var x) {
  return unary(Op::kSoftplus, x, [](const Matrix& m) {
    return Matrix(m.unaryExpr([](double v) { return cmdp::softplus(v); }));
  });
}

Var min(Var a, Var b) {
  return binary(Op::kMin, a, b,
                [](const Matrix& x, const Matrix& y) { return Matrix(x.cwiseMin(y)); });
}

Var max(Var a, Var b) {
  return binary(Op::kMax, a, b,
                [](const Matrix& x, const Matrix& y) { return Matrix(x.cwiseMax(y)); });
}

Var clip(Var x, double lo, double hi) {
  if (lo > hi) throw std::invalid_argument("clip bounds reversed");
  return unary(
      Op::kClip, x,
      [lo, hi](const Matrix& m) { return Matrix(m.cwiseMax(lo).cwiseMin(hi)); }, lo, hi);
}

Var square(Var x) {
  return unary(Op::kSquare, x, [](const Matrix& m) { return Matrix(m.array().square()); });
}

Var mean(Var x) {
  return unary(Op::kMean, x, [](const Matrix& m) { return Matrix::Constant(1, 1, m.mean()).eval(); });
}

Var sum(Var x) {
  return unary(Op::kSum, x, [](const Matrix& m) { return Matrix::Constant(1, 1, m.sum()).eval(); });
}

Var row_sum(Var x) {
  return unary(Op::kRowSum, x, [](const Matrix& m) { return Matrix(m.rowwise().sum()); });
}

}  // namespace cmdp
