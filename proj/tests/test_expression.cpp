#include <random>

#include "doctest.h"
#include "pkinn/expression.hpp"

using namespace pkinn;

namespace {

Expression times(double c, int var) {
  return Expression::binary(ExprOp::kMul, Expression::constant(c),
                            Expression::variable(var));
}

Expression random_tree(std::mt19937_64& rng, int depth) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::uniform_int_distribution<int> pick(0, 2);
  if (depth == 0 || pick(rng) == 0) {
    return pick(rng) < 1 ? Expression::constant(u(rng))
                         : Expression::variable(pick(rng));
  }
  const ExprOp ops[3] = {ExprOp::kAdd, ExprOp::kSub, ExprOp::kMul};
  return Expression::binary(ops[pick(rng)], random_tree(rng, depth - 1),
                            random_tree(rng, depth - 1));
}

}  // namespace

TEST_CASE("expression evaluation and size") {
  // (x0 + 2) * x1 - 0.5
  Expression e = Expression::binary(
      ExprOp::kSub,
      Expression::binary(
          ExprOp::kMul,
          Expression::binary(ExprOp::kAdd, Expression::variable(0),
                             Expression::constant(2.0)),
          Expression::variable(1)),
      Expression::constant(0.5));
  CHECK(e.eval(StateVector(1.0, 3.0, 0.0)) == doctest::Approx(8.5));
  CHECK(e.size() == 7);
  CHECK(e.depth() == 4);

  Expression copy = e;
  CHECK(copy.eval(StateVector(1.0, 3.0, 0.0)) == doctest::Approx(8.5));
  CHECK_THROWS_AS(Expression::variable(3), std::invalid_argument);
}

TEST_CASE("simplify removes identities and folds constants") {
  // X0 + 0 -> X0
  Expression a = Expression::binary(ExprOp::kAdd, Expression::variable(0),
                                    Expression::constant(0.0));
  CHECK(to_text(simplify(a)) == "X0");
  CHECK(simplify(a).size() == 1);

  // (2 * 3) * X1 -> 6 * X1
  Expression b = Expression::binary(
      ExprOp::kMul,
      Expression::binary(ExprOp::kMul, Expression::constant(2.0),
                         Expression::constant(3.0)),
      Expression::variable(1));
  Expression bs = simplify(b);
  CHECK(bs.size() == 3);
  CHECK(bs.root().op == ExprOp::kMul);
  CHECK(bs.root().left->value == 6.0);

  // X2 * 0 -> 0
  Expression c = Expression::binary(ExprOp::kMul, Expression::variable(2),
                                    Expression::constant(0.0));
  CHECK(to_text(simplify(c)) == "0");
  CHECK(simplify(c).size() == 1);
}

TEST_CASE("simplify preserves values on random trees") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    Expression e = random_tree(rng, 4);
    Expression s = simplify(e);
    for (int i = 0; i < 20; ++i) {
      StateVector x(u(rng), u(rng), u(rng));
      CHECK(std::abs(e.eval(x) - s.eval(x)) < 1e-10);
    }
    CHECK(s.size() <= e.size());
  }
}

TEST_CASE("expand produces the polynomial normal form") {
  // (X0 - 0.6) * X0 -> X0^2 - 0.6*X0
  Expression e = Expression::binary(
      ExprOp::kMul,
      Expression::binary(ExprOp::kSub, Expression::variable(0),
                         Expression::constant(0.6)),
      Expression::variable(0));
  PolynomialForm form = expand(e);
  REQUIRE(form.size() == 2);
  CHECK(form[Monomial{2, 0, 0}] == 1.0);
  CHECK(form[Monomial{1, 0, 0}] == -0.6);
}

TEST_CASE("to_text canonical rendering") {
  CHECK(to_text(times(-1.14, 0)) == "-1.1*X0");
  CHECK(to_text(Expression::constant(0.0)) == "0");
  // X1 + X0 renders in canonical variable order with bare unit coefficients.
  Expression sum = Expression::binary(ExprOp::kAdd, Expression::variable(1),
                                      Expression::variable(0));
  CHECK(to_text(sum) == "X0 + X1");

  // Quadratic before linear, honoring precision.
  Expression quad = Expression::binary(
      ExprOp::kMul,
      Expression::binary(ExprOp::kAdd, Expression::constant(-0.6),
                         Expression::variable(0)),
      Expression::variable(0));
  CHECK(to_text(quad) == "X0^2 - 0.6*X0");
  CHECK(to_text(times(0.04, 1)) == "0");          // rounds away at 1 decimal
  CHECK(to_text(times(0.04, 1), 2) == "0.04*X1");  // kept at 2 decimals

  Expression mixed = Expression::binary(
      ExprOp::kSub, times(2.3, 1), times(0.31, 2));
  CHECK(to_text(mixed) == "2.3*X1 - 0.3*X2");
}
