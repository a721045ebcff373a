#ifndef PKINN_AUTODIFF_HPP
#define PKINN_AUTODIFF_HPP

#include <Eigen/Core>
#include <cstdint>
#include <vector>

namespace pkinn::ad {

class Tape;

// Lightweight handle to a node on a tape.
struct Var {
  Tape* tape = nullptr;
  std::int32_t id = -1;

  const Eigen::MatrixXd& value() const;
  const Eigen::MatrixXd& grad() const;
};

// Reverse-mode tape over matrix-valued nodes (scalars are 1x1). Values are
// computed eagerly as the expression is built; backward() runs one reverse
// sweep and accumulates gradients into every leaf created with
// requires_grad. Build, backward and read-out are all deterministic.
class Tape {
 public:
  Var leaf(Eigen::MatrixXd value, bool requires_grad = false);
  Var scalar(double value, bool requires_grad = false);

  // c = a * b (matrix product)
  Var matmul(Var a, Var b);
  // elementwise, equal shapes
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var cwise_mul(Var a, Var b);
  // m + col broadcast across columns of m
  Var add_col(Var m, Var col);
  Var tanh(Var a);
  // alpha * a + beta, elementwise constants
  Var affine(Var a, double alpha, double beta);
  // scalar (1x1) times matrix
  Var scalar_mul(Var s, Var a);
  // matrix divided by scalar (1x1)
  Var scalar_div(Var a, Var s);
  Var sum(Var a);
  Var sum_squares(Var a);
  Var sqrt(Var a);  // 1x1 only
  // vertical concatenation
  Var vcat(Var a, Var b);
  Var row(Var a, Eigen::Index i);

  // Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse. `loss` must
  // be 1x1. Gradients of all requires_grad leaves are then readable via
  // grad(). Throws ShapeError on a non-scalar loss.
  void backward(Var loss);

  const Eigen::MatrixXd& value(Var v) const { return nodes_[v.id].value; }
  const Eigen::MatrixXd& grad(Var v) const { return nodes_[v.id].grad; }

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  enum class Op : std::uint8_t {
    kLeaf,
    kMatmul,
    kAdd,
    kSub,
    kCwiseMul,
    kAddCol,
    kTanh,
    kAffine,
    kScalarMul,
    kScalarDiv,
    kSum,
    kSumSquares,
    kSqrt,
    kVcat,
    kRow,
  };

  struct Node {
    Eigen::MatrixXd value;
    Eigen::MatrixXd grad;
    Op op = Op::kLeaf;
    std::int32_t a = -1;
    std::int32_t b = -1;
    double alpha = 0.0;  // affine scale / row index
    double beta = 0.0;   // affine shift
    bool needs_grad = false;
  };

  Var push(Node node);
  Var unary(Op op, Var a, Eigen::MatrixXd value, double alpha = 0.0,
            double beta = 0.0);
  Var binary(Op op, Var a, Var b, Eigen::MatrixXd value);
  void check_same_tape(Var v) const;

  std::vector<Node> nodes_;
};

}  // namespace pkinn::ad

#endif  // PKINN_AUTODIFF_HPP
