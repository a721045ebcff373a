#ifndef PKINN_EXPRESSION_HPP
#define PKINN_EXPRESSION_HPP

#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "pkinn/pk_model.hpp"

namespace pkinn {

enum class ExprOp : std::uint8_t { kConst, kVar, kAdd, kSub, kMul };

struct ExprNode;
using ExprPtr = std::unique_ptr<ExprNode>;

struct ExprNode {
  ExprOp op = ExprOp::kConst;
  double value = 0.0;  // kConst only
  int var = 0;         // kVar only, 0..2
  ExprPtr left;
  ExprPtr right;
};

ExprPtr clone(const ExprNode& node);

// Expression tree over {X0, X1, X2} with operators {+, -, *} and real
// constants. Value semantics via deep copy.
class Expression {
 public:
  Expression() : root_(std::make_unique<ExprNode>()) {}  // constant 0
  explicit Expression(ExprPtr root) : root_(std::move(root)) {}
  Expression(const Expression& other) : root_(clone(*other.root_)) {}
  Expression(Expression&&) noexcept = default;
  Expression& operator=(const Expression& other) {
    if (this != &other) root_ = clone(*other.root_);
    return *this;
  }
  Expression& operator=(Expression&&) noexcept = default;

  static Expression constant(double value);
  static Expression variable(int index);  // 0..2
  static Expression binary(ExprOp op, Expression left, Expression right);

  const ExprNode& root() const { return *root_; }
  ExprPtr& root_slot() { return root_; }  // mutable access for GP surgery

  double eval(const StateVector& x) const;
  Eigen::VectorXd eval_rows(const StateMatrix& states) const;
  int size() const;   // node count
  int depth() const;

 private:
  ExprPtr root_;
};

// Exponent triple of a monomial c * X0^a X1^b X2^c.
struct Monomial {
  int e0 = 0, e1 = 0, e2 = 0;
  int degree() const { return e0 + e1 + e2; }
  bool operator==(const Monomial&) const = default;
};

// Canonical ordering: total degree descending, then X0/X1/X2 exponents
// descending (so X0^2, X0*X1, ..., X0, X1, X2, constant).
struct MonomialOrder {
  bool operator()(const Monomial& a, const Monomial& b) const;
};

using PolynomialForm = std::map<Monomial, double, MonomialOrder>;

// "X0^2*X1" style; "1" for the empty monomial.
std::string to_string(const Monomial& m);

// Expands the tree into its polynomial normal form. Operators are closed
// over polynomials, so this is exact.
PolynomialForm expand(const Expression& expr);

// Constant folding, identity elimination and flattening of nested sums;
// value-equivalent to the input on all states.
Expression simplify(const Expression& expr);

// Canonical rendering of the expanded form: coefficients rounded to
// `precision` decimals, terms in MonomialOrder, unit coefficients bare.
// Terms whose coefficient rounds to zero are dropped; an empty render is
// "0".
std::string to_text(const Expression& expr, int precision = 1);

}  // namespace pkinn

#endif  // PKINN_EXPRESSION_HPP
