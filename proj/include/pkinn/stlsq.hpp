#ifndef PKINN_STLSQ_HPP
#define PKINN_STLSQ_HPP

#include <string>
#include <vector>

#include "pkinn/expression.hpp"
#include "pkinn/pk_model.hpp"

namespace pkinn {

// Fixed polynomial basis over (X0, X1, X2). Degree 1 gives
// [1, X0, X1, X2]; degree 2 appends the six quadratic terms
// [X0^2, X0*X1, X0*X2, X1^2, X1*X2, X2^2].
struct CandidateLibrary {
  int degree = 2;

  int size() const;
  std::vector<Monomial> monomials() const;
  std::vector<std::string> names() const;
};

// Column j is basis function j evaluated on every state row.
Eigen::MatrixXd build_library(const StateMatrix& states, int degree);

struct StlsqSettings {
  double threshold = 0.1;
  int max_iter = 20;
  double ridge = 0.0;  // 0 disables regularization
};

struct SparseModel {
  CandidateLibrary library;
  Eigen::MatrixXd coefficients;  // library size x number of target columns
};

// Sequentially thresholded least squares, fit independently per target
// column: least-squares fit, zero out coefficients below the threshold,
// refit on the surviving support, repeat to a fixed point (or max_iter).
// Throws IllConditionedError on a rank-deficient design when ridge == 0.
SparseModel stlsq(const Eigen::MatrixXd& design, const Eigen::MatrixXd& targets,
                  const StlsqSettings& settings = {});

// The fitted column as an expression tree (sum of coefficient * monomial).
Expression to_expression(const SparseModel& model, int component);

}  // namespace pkinn

#endif  // PKINN_STLSQ_HPP
