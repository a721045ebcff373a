#include "pkinn/expression.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace pkinn {

ExprPtr clone(const ExprNode& node) {
  auto copy = std::make_unique<ExprNode>();
  copy->op = node.op;
  copy->value = node.value;
  copy->var = node.var;
  if (node.left) copy->left = clone(*node.left);
  if (node.right) copy->right = clone(*node.right);
  return copy;
}

Expression Expression::constant(double value) {
  auto node = std::make_unique<ExprNode>();
  node->op = ExprOp::kConst;
  node->value = value;
  return Expression(std::move(node));
}

Expression Expression::variable(int index) {
  if (index < 0 || index > 2) {
    throw std::invalid_argument("Expression: variable index out of range");
  }
  auto node = std::make_unique<ExprNode>();
  node->op = ExprOp::kVar;
  node->var = index;
  return Expression(std::move(node));
}

Expression Expression::binary(ExprOp op, Expression left, Expression right) {
  if (op != ExprOp::kAdd && op != ExprOp::kSub && op != ExprOp::kMul) {
    throw std::invalid_argument("Expression: binary op expected");
  }
  auto node = std::make_unique<ExprNode>();
  node->op = op;
  node->left = std::move(left.root_slot());
  node->right = std::move(right.root_slot());
  return Expression(std::move(node));
}

namespace {

double eval_node(const ExprNode& n, const StateVector& x) {
  switch (n.op) {
    case ExprOp::kConst:
      return n.value;
    case ExprOp::kVar:
      return x[n.var];
    case ExprOp::kAdd:
      return eval_node(*n.left, x) + eval_node(*n.right, x);
    case ExprOp::kSub:
      return eval_node(*n.left, x) - eval_node(*n.right, x);
    case ExprOp::kMul:
      return eval_node(*n.left, x) * eval_node(*n.right, x);
  }
  return 0.0;
}

int size_node(const ExprNode& n) {
  int s = 1;
  if (n.left) s += size_node(*n.left);
  if (n.right) s += size_node(*n.right);
  return s;
}

int depth_node(const ExprNode& n) {
  int d = 0;
  if (n.left) d = std::max(d, depth_node(*n.left));
  if (n.right) d = std::max(d, depth_node(*n.right));
  return d + 1;
}

}  // namespace

double Expression::eval(const StateVector& x) const {
  return eval_node(*root_, x);
}

Eigen::VectorXd Expression::eval_rows(const StateMatrix& states) const {
  Eigen::VectorXd out(states.rows());
  for (Eigen::Index i = 0; i < states.rows(); ++i) {
    out[i] = eval(states.row(i).transpose());
  }
  return out;
}

int Expression::size() const { return size_node(*root_); }
int Expression::depth() const { return depth_node(*root_); }

bool MonomialOrder::operator()(const Monomial& a, const Monomial& b) const {
  if (a.degree() != b.degree()) return a.degree() > b.degree();
  if (a.e0 != b.e0) return a.e0 > b.e0;
  if (a.e1 != b.e1) return a.e1 > b.e1;
  return a.e2 > b.e2;
}

namespace {

PolynomialForm expand_node(const ExprNode& n) {
  PolynomialForm form;
  switch (n.op) {
    case ExprOp::kConst:
      if (n.value != 0.0) form[Monomial{}] = n.value;
      break;
    case ExprOp::kVar: {
      Monomial m;
      (n.var == 0 ? m.e0 : n.var == 1 ? m.e1 : m.e2) = 1;
      form[m] = 1.0;
      break;
    }
    case ExprOp::kAdd:
    case ExprOp::kSub: {
      form = expand_node(*n.left);
      const double sign = n.op == ExprOp::kAdd ? 1.0 : -1.0;
      for (const auto& [m, c] : expand_node(*n.right)) form[m] += sign * c;
      break;
    }
    case ExprOp::kMul: {
      const PolynomialForm a = expand_node(*n.left);
      const PolynomialForm b = expand_node(*n.right);
      for (const auto& [ma, ca] : a) {
        for (const auto& [mb, cb] : b) {
          Monomial m{ma.e0 + mb.e0, ma.e1 + mb.e1, ma.e2 + mb.e2};
          form[m] += ca * cb;
        }
      }
      break;
    }
  }
  return form;
}

}  // namespace

PolynomialForm expand(const Expression& expr) {
  PolynomialForm form = expand_node(expr.root());
  std::erase_if(form, [](const auto& kv) { return kv.second == 0.0; });
  return form;
}

namespace {

bool is_const(const ExprNode& n, double v) {
  return n.op == ExprOp::kConst && n.value == v;
}

ExprPtr make_const(double v) {
  auto n = std::make_unique<ExprNode>();
  n->op = ExprOp::kConst;
  n->value = v;
  return n;
}

ExprPtr simplify_node(const ExprNode& n);

// Collects the additive chain under `n` as signed simplified terms.
void collect_sum(const ExprNode& n, double sign,
                 std::vector<std::pair<double, ExprPtr>>& terms) {
  if (n.op == ExprOp::kAdd || n.op == ExprOp::kSub) {
    collect_sum(*n.left, sign, terms);
    collect_sum(*n.right, n.op == ExprOp::kAdd ? sign : -sign, terms);
    return;
  }
  terms.emplace_back(sign, simplify_node(n));
}

ExprPtr simplify_node(const ExprNode& n) {
  switch (n.op) {
    case ExprOp::kConst:
    case ExprOp::kVar:
      return clone(n);
    case ExprOp::kMul: {
      ExprPtr l = simplify_node(*n.left);
      ExprPtr r = simplify_node(*n.right);
      if (is_const(*l, 0.0) || is_const(*r, 0.0)) return make_const(0.0);
      if (l->op == ExprOp::kConst && r->op == ExprOp::kConst) {
        return make_const(l->value * r->value);
      }
      if (is_const(*l, 1.0)) return r;
      if (is_const(*r, 1.0)) return l;
      // Fold a constant into a nested constant product: c1*(c2*x) -> (c1*c2)*x
      if (l->op == ExprOp::kConst && r->op == ExprOp::kMul &&
          r->left->op == ExprOp::kConst) {
        l = make_const(l->value * r->left->value);
        r = std::move(r->right);
        if (is_const(*l, 1.0)) return r;
      }
      auto out = std::make_unique<ExprNode>();
      out->op = ExprOp::kMul;
      out->left = std::move(l);
      out->right = std::move(r);
      return out;
    }
    case ExprOp::kAdd:
    case ExprOp::kSub: {
      std::vector<std::pair<double, ExprPtr>> terms;
      collect_sum(n, 1.0, terms);
      double const_acc = 0.0;
      std::vector<std::pair<double, ExprPtr>> kept;
      for (auto& [sign, term] : terms) {
        if (term->op == ExprOp::kConst) {
          const_acc += sign * term->value;
        } else {
          kept.emplace_back(sign, std::move(term));
        }
      }
      // Lead with a positive term when one exists so the rebuild never
      // needs a (-1 * term) wrapper; otherwise lead with the folded
      // constant. The leftmost collected term always carries sign +1, so
      // one of the two exists whenever any term survives.
      std::stable_partition(kept.begin(), kept.end(),
                            [](const auto& t) { return t.first > 0; });
      if (kept.empty()) return make_const(const_acc);

      ExprPtr acc;
      bool const_pending = const_acc != 0.0;
      if (kept.front().first < 0) {
        acc = make_const(const_acc);
        const_pending = false;
      }
      for (auto& [sign, term] : kept) {
        if (!acc) {
          acc = std::move(term);
          continue;
        }
        auto next = std::make_unique<ExprNode>();
        next->op = sign > 0 ? ExprOp::kAdd : ExprOp::kSub;
        next->left = std::move(acc);
        next->right = std::move(term);
        acc = std::move(next);
      }
      if (const_pending) {
        auto next = std::make_unique<ExprNode>();
        next->op = const_acc > 0 ? ExprOp::kAdd : ExprOp::kSub;
        next->left = std::move(acc);
        next->right = make_const(std::abs(const_acc));
        acc = std::move(next);
      }
      return acc;
    }
  }
  return make_const(0.0);
}

}  // namespace

Expression simplify(const Expression& expr) {
  return Expression(simplify_node(expr.root()));
}

namespace {

std::string format_coefficient(double magnitude, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, magnitude);
  return buf;
}

std::string monomial_text(const Monomial& m) {
  std::string out;
  const int exps[3] = {m.e0, m.e1, m.e2};
  for (int v = 0; v < 3; ++v) {
    if (exps[v] == 0) continue;
    if (!out.empty()) out += "*";
    out += "X" + std::to_string(v);
    if (exps[v] > 1) out += "^" + std::to_string(exps[v]);
  }
  return out;
}

}  // namespace

std::string to_string(const Monomial& m) {
  const std::string text = monomial_text(m);
  return text.empty() ? "1" : text;
}

std::string to_text(const Expression& expr, int precision) {
  const PolynomialForm form = expand(expr);
  const double unit = std::pow(10.0, -precision);

  std::string out;
  for (const auto& [mono, coeff] : form) {
    const double rounded = std::round(coeff / unit) * unit;
    if (rounded == 0.0) continue;
    const bool negative = rounded < 0.0;
    const double magnitude = std::abs(rounded);
    const std::string vars = monomial_text(mono);

    if (out.empty()) {
      if (negative) out += "-";
    } else {
      out += negative ? " - " : " + ";
    }
    const bool unit_coeff =
        !vars.empty() && std::abs(magnitude - 1.0) < unit / 2;
    if (vars.empty()) {
      out += format_coefficient(magnitude, precision);
    } else if (unit_coeff) {
      out += vars;
    } else {
      out += format_coefficient(magnitude, precision) + "*" + vars;
    }
  }
  return out.empty() ? "0" : out;
}

}  // namespace pkinn
