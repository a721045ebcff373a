#include "pkinn/autodiff.hpp"

#include <cmath>

#include "pkinn/errors.hpp"

namespace pkinn::ad {

const Eigen::MatrixXd& Var::value() const { return tape->value(*this); }
const Eigen::MatrixXd& Var::grad() const { return tape->grad(*this); }

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<std::int32_t>(nodes_.size() - 1)};
}

void Tape::check_same_tape(Var v) const {
  if (v.tape != this || v.id < 0 ||
      v.id >= static_cast<std::int32_t>(nodes_.size())) {
    throw ShapeError("autodiff: variable does not belong to this tape");
  }
}

Var Tape::leaf(Eigen::MatrixXd value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.needs_grad = requires_grad;
  return push(std::move(n));
}

Var Tape::scalar(double value, bool requires_grad) {
  return leaf(Eigen::MatrixXd::Constant(1, 1, value), requires_grad);
}

Var Tape::unary(Op op, Var a, Eigen::MatrixXd value, double alpha,
                double beta) {
  check_same_tape(a);
  Node n;
  n.value = std::move(value);
  n.op = op;
  n.a = a.id;
  n.alpha = alpha;
  n.beta = beta;
  n.needs_grad = nodes_[a.id].needs_grad;
  return push(std::move(n));
}

Var Tape::binary(Op op, Var a, Var b, Eigen::MatrixXd value) {
  check_same_tape(a);
  check_same_tape(b);
  Node n;
  n.value = std::move(value);
  n.op = op;
  n.a = a.id;
  n.b = b.id;
  n.needs_grad = nodes_[a.id].needs_grad || nodes_[b.id].needs_grad;
  return push(std::move(n));
}

namespace {

void require_same_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                        const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string("autodiff: shape mismatch in ") + what);
  }
}

void require_scalar(const Eigen::MatrixXd& a, const char* what) {
  if (a.rows() != 1 || a.cols() != 1) {
    throw ShapeError(std::string("autodiff: expected 1x1 operand in ") + what);
  }
}

}  // namespace

Var Tape::matmul(Var a, Var b) {
  check_same_tape(a);
  check_same_tape(b);
  const auto& av = nodes_[a.id].value;
  const auto& bv = nodes_[b.id].value;
  if (av.cols() != bv.rows()) throw ShapeError("autodiff: matmul shapes");
  return binary(Op::kMatmul, a, b, av * bv);
}

Var Tape::add(Var a, Var b) {
  require_same_shape(nodes_[a.id].value, nodes_[b.id].value, "add");
  return binary(Op::kAdd, a, b, nodes_[a.id].value + nodes_[b.id].value);
}

Var Tape::sub(Var a, Var b) {
  require_same_shape(nodes_[a.id].value, nodes_[b.id].value, "sub");
  return binary(Op::kSub, a, b, nodes_[a.id].value - nodes_[b.id].value);
}

Var Tape::cwise_mul(Var a, Var b) {
  require_same_shape(nodes_[a.id].value, nodes_[b.id].value, "cwise_mul");
  return binary(Op::kCwiseMul, a, b,
                nodes_[a.id].value.cwiseProduct(nodes_[b.id].value));
}

Var Tape::add_col(Var m, Var col) {
  const auto& mv = nodes_[m.id].value;
  const auto& cv = nodes_[col.id].value;
  if (cv.cols() != 1 || cv.rows() != mv.rows()) {
    throw ShapeError("autodiff: add_col shapes");
  }
  return binary(Op::kAddCol, m, col, mv.colwise() + cv.col(0));
}

Var Tape::tanh(Var a) {
  return unary(Op::kTanh, a, nodes_[a.id].value.array().tanh().matrix());
}

Var Tape::affine(Var a, double alpha, double beta) {
  return unary(Op::kAffine, a,
               (alpha * nodes_[a.id].value.array() + beta).matrix(), alpha,
               beta);
}

Var Tape::scalar_mul(Var s, Var a) {
  require_scalar(nodes_[s.id].value, "scalar_mul");
  return binary(Op::kScalarMul, s, a,
                nodes_[s.id].value(0, 0) * nodes_[a.id].value);
}

Var Tape::scalar_div(Var a, Var s) {
  require_scalar(nodes_[s.id].value, "scalar_div");
  return binary(Op::kScalarDiv, a, s,
                nodes_[a.id].value / nodes_[s.id].value(0, 0));
}

Var Tape::sum(Var a) {
  return unary(Op::kSum, a,
               Eigen::MatrixXd::Constant(1, 1, nodes_[a.id].value.sum()));
}

Var Tape::sum_squares(Var a) {
  return unary(
      Op::kSumSquares, a,
      Eigen::MatrixXd::Constant(1, 1, nodes_[a.id].value.squaredNorm()));
}

Var Tape::sqrt(Var a) {
  require_scalar(nodes_[a.id].value, "sqrt");
  return unary(Op::kSqrt, a,
               Eigen::MatrixXd::Constant(
                   1, 1, std::sqrt(nodes_[a.id].value(0, 0))));
}

Var Tape::vcat(Var a, Var b) {
  const auto& av = nodes_[a.id].value;
  const auto& bv = nodes_[b.id].value;
  if (av.cols() != bv.cols()) throw ShapeError("autodiff: vcat shapes");
  Eigen::MatrixXd v(av.rows() + bv.rows(), av.cols());
  v.topRows(av.rows()) = av;
  v.bottomRows(bv.rows()) = bv;
  return binary(Op::kVcat, a, b, std::move(v));
}

Var Tape::row(Var a, Eigen::Index i) {
  const auto& av = nodes_[a.id].value;
  if (i < 0 || i >= av.rows()) throw ShapeError("autodiff: row index");
  return unary(Op::kRow, a, av.row(i), static_cast<double>(i));
}

void Tape::backward(Var loss) {
  check_same_tape(loss);
  require_scalar(nodes_[loss.id].value, "backward");

  for (auto& n : nodes_) {
    if (n.needs_grad) {
      n.grad.setZero(n.value.rows(), n.value.cols());
    }
  }
  if (!nodes_[loss.id].needs_grad) return;  // objective independent of params
  nodes_[loss.id].grad(0, 0) = 1.0;

  for (std::int32_t i = loss.id; i >= 0; --i) {
    const Node& n = nodes_[i];
    if (!n.needs_grad || n.op == Op::kLeaf) continue;
    const Eigen::MatrixXd& g = n.grad;
    Node& pa = nodes_[n.a];
    switch (n.op) {
      case Op::kMatmul: {
        Node& pb = nodes_[n.b];
        if (pa.needs_grad) pa.grad.noalias() += g * pb.value.transpose();
        if (pb.needs_grad) pb.grad.noalias() += pa.value.transpose() * g;
        break;
      }
      case Op::kAdd: {
        Node& pb = nodes_[n.b];
        if (pa.needs_grad) pa.grad += g;
        if (pb.needs_grad) pb.grad += g;
        break;
      }
      case Op::kSub: {
        Node& pb = nodes_[n.b];
        if (pa.needs_grad) pa.grad += g;
        if (pb.needs_grad) pb.grad -= g;
        break;
      }
      case Op::kCwiseMul: {
        Node& pb = nodes_[n.b];
        if (pa.needs_grad) pa.grad += g.cwiseProduct(pb.value);
        if (pb.needs_grad) pb.grad += g.cwiseProduct(pa.value);
        break;
      }
      case Op::kAddCol: {
        Node& pb = nodes_[n.b];
        if (pa.needs_grad) pa.grad += g;
        if (pb.needs_grad) pb.grad += g.rowwise().sum();
        break;
      }
      case Op::kTanh:
        if (pa.needs_grad) {
          pa.grad.array() += g.array() * (1.0 - n.value.array().square());
        }
        break;
      case Op::kAffine:
        if (pa.needs_grad) pa.grad += n.alpha * g;
        break;
      case Op::kScalarMul: {
        Node& pb = nodes_[n.b];
        if (pa.needs_grad) pa.grad(0, 0) += g.cwiseProduct(pb.value).sum();
        if (pb.needs_grad) pb.grad += pa.value(0, 0) * g;
        break;
      }
      case Op::kScalarDiv: {
        Node& pb = nodes_[n.b];
        const double s = pb.value(0, 0);
        if (pa.needs_grad) pa.grad += g / s;
        if (pb.needs_grad) {
          pb.grad(0, 0) -= g.cwiseProduct(pa.value).sum() / (s * s);
        }
        break;
      }
      case Op::kSum:
        if (pa.needs_grad) pa.grad.array() += g(0, 0);
        break;
      case Op::kSumSquares:
        if (pa.needs_grad) pa.grad += 2.0 * g(0, 0) * pa.value;
        break;
      case Op::kSqrt:
        if (pa.needs_grad) pa.grad(0, 0) += g(0, 0) / (2.0 * n.value(0, 0));
        break;
      case Op::kVcat: {
        Node& pb = nodes_[n.b];
        if (pa.needs_grad) pa.grad += g.topRows(pa.value.rows());
        if (pb.needs_grad) pb.grad += g.bottomRows(pb.value.rows());
        break;
      }
      case Op::kRow:
        if (pa.needs_grad) {
          pa.grad.row(static_cast<Eigen::Index>(n.alpha)) += g;
        }
        break;
      case Op::kLeaf:
        break;
    }
  }
}

}  // namespace pkinn::ad
