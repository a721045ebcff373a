#include <random>

#include "doctest.h"
#include "pkinn/autodiff.hpp"
#include "pkinn/errors.hpp"

using namespace pkinn;

TEST_CASE("gradient of sum of squares is 2p") {
  ad::Tape tape;
  Eigen::MatrixXd p(3, 1);
  p << 1.0, -2.0, 0.5;
  ad::Var pv = tape.leaf(p, true);
  ad::Var loss = tape.sum_squares(pv);
  tape.backward(loss);
  CHECK(tape.grad(pv) == 2.0 * p);
}

TEST_CASE("gradient of a constant objective is zero") {
  ad::Tape tape;
  ad::Var pv = tape.leaf(Eigen::MatrixXd::Ones(4, 1), true);
  ad::Var c = tape.scalar(3.0);
  ad::Var loss = tape.sum_squares(c);  // does not touch pv
  tape.backward(loss);
  CHECK(tape.grad(pv).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("backward rejects non-scalar objectives") {
  ad::Tape tape;
  ad::Var v = tape.leaf(Eigen::MatrixXd::Ones(2, 2), true);
  CHECK_THROWS_AS(tape.backward(v), ShapeError);
}

TEST_CASE("shape mismatches throw") {
  ad::Tape tape;
  ad::Var a = tape.leaf(Eigen::MatrixXd::Ones(2, 3));
  ad::Var b = tape.leaf(Eigen::MatrixXd::Ones(3, 2));
  CHECK_THROWS_AS(tape.add(a, b), ShapeError);
  CHECK_THROWS_AS(tape.cwise_mul(a, b), ShapeError);
  CHECK_THROWS_AS(tape.matmul(a, a), ShapeError);
  CHECK_THROWS_AS(tape.sqrt(a), ShapeError);
}

namespace {

// Finite-difference check of d(loss)/d(leaf) for a scalar-valued builder.
void check_gradient(
    const Eigen::MatrixXd& x0,
    const std::function<ad::Var(ad::Tape&, ad::Var)>& build) {
  ad::Tape tape;
  ad::Var x = tape.leaf(x0, true);
  ad::Var loss = build(tape, x);
  tape.backward(loss);
  Eigen::MatrixXd analytic = tape.grad(x);

  const double h = 1e-6;
  for (Eigen::Index r = 0; r < x0.rows(); ++r) {
    for (Eigen::Index c = 0; c < x0.cols(); ++c) {
      Eigen::MatrixXd xp = x0, xm = x0;
      xp(r, c) += h;
      xm(r, c) -= h;
      ad::Tape tp, tm;
      const double fp = build(tp, tp.leaf(xp, true)).value()(0, 0);
      const double fm = build(tm, tm.leaf(xm, true)).value()(0, 0);
      const double fd = (fp - fm) / (2 * h);
      const double scale = std::max(1.0, std::abs(fd));
      CHECK(std::abs(analytic(r, c) - fd) < 1e-6 * scale);
    }
  }
}

}  // namespace

TEST_CASE("finite differences validate every primitive") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd x(3, 2);
  for (int i = 0; i < x.size(); ++i) x(i / 2, i % 2) = u(rng);
  Eigen::MatrixXd w = Eigen::MatrixXd::NullaryExpr(2, 3, [&] { return u(rng); });

  check_gradient(x, [&](ad::Tape& t, ad::Var v) {
    return t.sum_squares(t.tanh(t.matmul(t.leaf(w), v)));
  });
  check_gradient(x, [&](ad::Tape& t, ad::Var v) {
    return t.sum(t.cwise_mul(v, t.tanh(v)));
  });
  check_gradient(x, [&](ad::Tape& t, ad::Var v) {
    return t.sqrt(t.sum_squares(t.affine(v, 1.5, -0.25)));
  });
  check_gradient(x, [&](ad::Tape& t, ad::Var v) {
    ad::Var col = t.leaf(Eigen::MatrixXd::Constant(3, 1, 0.7));
    return t.sum_squares(t.add_col(v, col));
  });
  check_gradient(x, [&](ad::Tape& t, ad::Var v) {
    return t.sum_squares(t.vcat(v, t.cwise_mul(v, v)));
  });
  check_gradient(x, [&](ad::Tape& t, ad::Var v) {
    return t.sum_squares(t.row(v, 1));
  });
  // Scalar broadcast ops, including gradients w.r.t. the scalar itself.
  Eigen::MatrixXd s(1, 1);
  s << 0.8;
  check_gradient(s, [&](ad::Tape& t, ad::Var v) {
    return t.sum_squares(t.scalar_mul(v, t.leaf(w)));
  });
  check_gradient(s, [&](ad::Tape& t, ad::Var v) {
    return t.sum_squares(t.scalar_div(t.leaf(w), v));
  });
  check_gradient(x, [&](ad::Tape& t, ad::Var v) {
    ad::Var denom = t.scalar(1.7, false);
    return t.sum(t.scalar_div(t.cwise_mul(v, v), denom));
  });
}

TEST_CASE("gradients accumulate across reuse of a node") {
  // loss = sum((w*x)^2) + sum(w^2): w appears twice.
  Eigen::MatrixXd w0(2, 2);
  w0 << 0.3, -0.4, 0.9, 0.1;
  check_gradient(w0, [&](ad::Tape& t, ad::Var w) {
    Eigen::MatrixXd x(2, 1);
    x << 1.0, -2.0;
    return t.add(t.sum_squares(t.matmul(w, t.leaf(x))), t.sum_squares(w));
  });
}
