#include "pkinn/stlsq.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "pkinn/errors.hpp"

namespace pkinn {

int CandidateLibrary::size() const { return degree == 1 ? 4 : 10; }

std::vector<Monomial> CandidateLibrary::monomials() const {
  if (degree != 1 && degree != 2) {
    throw std::invalid_argument("CandidateLibrary: degree must be 1 or 2");
  }
  std::vector<Monomial> out = {
      {0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  if (degree == 2) {
    out.insert(out.end(), {{2, 0, 0},
                           {1, 1, 0},
                           {1, 0, 1},
                           {0, 2, 0},
                           {0, 1, 1},
                           {0, 0, 2}});
  }
  return out;
}

std::vector<std::string> CandidateLibrary::names() const {
  std::vector<std::string> out;
  for (const Monomial& m : monomials()) {
    std::string name;
    const int exps[3] = {m.e0, m.e1, m.e2};
    for (int v = 0; v < 3; ++v) {
      for (int k = 0; k < exps[v]; ++k) {
        if (!name.empty()) name += "*";
        name += "X" + std::to_string(v);
      }
    }
    out.push_back(name.empty() ? "1" : name);
  }
  return out;
}

Eigen::MatrixXd build_library(const StateMatrix& states, int degree) {
  if (states.rows() == 0) {
    throw std::invalid_argument("build_library: empty state matrix");
  }
  CandidateLibrary lib{degree};
  const std::vector<Monomial> monos = lib.monomials();
  Eigen::MatrixXd design(states.rows(), lib.size());
  for (std::size_t j = 0; j < monos.size(); ++j) {
    Eigen::ArrayXd col = Eigen::ArrayXd::Ones(states.rows());
    for (int k = 0; k < monos[j].e0; ++k) col *= states.col(0).array();
    for (int k = 0; k < monos[j].e1; ++k) col *= states.col(1).array();
    for (int k = 0; k < monos[j].e2; ++k) col *= states.col(2).array();
    design.col(static_cast<Eigen::Index>(j)) = col.matrix();
  }
  return design;
}

namespace {

// Least squares on the selected columns; ridge > 0 switches to the normal
// equations with Tikhonov damping.
Eigen::VectorXd solve_subset(const Eigen::MatrixXd& design,
                             const Eigen::VectorXd& target,
                             const std::vector<int>& support, double ridge) {
  Eigen::MatrixXd sub(design.rows(), static_cast<Eigen::Index>(support.size()));
  for (std::size_t k = 0; k < support.size(); ++k) {
    sub.col(static_cast<Eigen::Index>(k)) = design.col(support[k]);
  }
  if (ridge > 0.0) {
    const Eigen::MatrixXd gram =
        sub.transpose() * sub +
        ridge * Eigen::MatrixXd::Identity(sub.cols(), sub.cols());
    return gram.ldlt().solve(sub.transpose() * target);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(sub);
  if (qr.rank() < sub.cols()) {
    throw IllConditionedError(
        "stlsq: rank-deficient design (enable ridge regularization or add "
        "data)");
  }
  return qr.solve(target);
}

}  // namespace

SparseModel stlsq(const Eigen::MatrixXd& design, const Eigen::MatrixXd& targets,
                  const StlsqSettings& settings) {
  if (design.rows() != targets.rows()) {
    throw std::invalid_argument("stlsq: row count mismatch");
  }
  if (settings.threshold <= 0.0) {
    throw std::invalid_argument("stlsq: threshold must be positive");
  }
  const int n_basis = static_cast<int>(design.cols());

  SparseModel model;
  model.library.degree = n_basis == 4 ? 1 : 2;
  model.coefficients = Eigen::MatrixXd::Zero(n_basis, targets.cols());

  for (Eigen::Index col = 0; col < targets.cols(); ++col) {
    std::vector<int> support(n_basis);
    for (int j = 0; j < n_basis; ++j) support[j] = j;

    Eigen::VectorXd coeffs;
    for (int iter = 0; iter < settings.max_iter && !support.empty(); ++iter) {
      coeffs = solve_subset(design, targets.col(col), support, settings.ridge);
      std::vector<int> kept;
      for (std::size_t k = 0; k < support.size(); ++k) {
        if (std::abs(coeffs[static_cast<Eigen::Index>(k)]) >=
            settings.threshold) {
          kept.push_back(support[k]);
        }
      }
      if (kept.size() == support.size()) break;  // fixed point
      support = std::move(kept);
      coeffs.resize(0);
    }
    if (support.empty()) continue;
    if (coeffs.size() == 0) {
      coeffs = solve_subset(design, targets.col(col), support, settings.ridge);
    }
    // No-op at a fixed point; keeps every surviving coefficient at or
    // above the threshold when max_iter cut the iteration short.
    for (std::size_t k = 0; k < support.size(); ++k) {
      if (std::abs(coeffs[static_cast<Eigen::Index>(k)]) >=
          settings.threshold) {
        model.coefficients(support[k], col) =
            coeffs[static_cast<Eigen::Index>(k)];
      }
    }
  }
  return model;
}

Expression to_expression(const SparseModel& model, int component) {
  if (component < 0 || component >= model.coefficients.cols()) {
    throw std::invalid_argument("to_expression: component out of range");
  }
  const std::vector<Monomial> monos = model.library.monomials();
  Expression acc;
  bool first = true;
  for (std::size_t j = 0; j < monos.size(); ++j) {
    const double c =
        model.coefficients(static_cast<Eigen::Index>(j), component);
    if (c == 0.0) continue;
    Expression term = Expression::constant(c);
    const int exps[3] = {monos[j].e0, monos[j].e1, monos[j].e2};
    for (int v = 0; v < 3; ++v) {
      for (int k = 0; k < exps[v]; ++k) {
        term = Expression::binary(ExprOp::kMul, std::move(term),
                                  Expression::variable(v));
      }
    }
    acc = first ? std::move(term)
                : Expression::binary(ExprOp::kAdd, std::move(acc),
                                     std::move(term));
    first = false;
  }
  return acc;  // zero constant when nothing survived
}

}  // namespace pkinn
