#include <random>

#include "doctest.h"
#include "pkinn/errors.hpp"
#include "pkinn/stlsq.hpp"

using namespace pkinn;

TEST_CASE("library layout") {
  CandidateLibrary lib;
  CHECK(lib.size() == 10);
  CHECK(CandidateLibrary{1}.size() == 4);
  const std::vector<std::string> names = lib.names();
  CHECK(names[0] == "1");
  CHECK(names[1] == "X0");
  CHECK(names[4] == "X0*X0");
  CHECK(names[5] == "X0*X1");
  CHECK(names[9] == "X2*X2");
}

TEST_CASE("build_library rows") {
  StateMatrix one(1, 3);
  one << 1, 0, 0;
  Eigen::MatrixXd design = build_library(one, 2);
  Eigen::VectorXd expected(10);
  expected << 1, 1, 0, 0, 1, 0, 0, 0, 0, 0;
  CHECK(design.row(0).transpose() == expected);

  StateMatrix zero(1, 3);
  zero << 0, 0, 0;
  Eigen::MatrixXd d1 = build_library(zero, 1);
  Eigen::VectorXd e1(4);
  e1 << 1, 0, 0, 0;
  CHECK(d1.row(0).transpose() == e1);

  CHECK_THROWS_AS(build_library(one, 3), std::invalid_argument);
  CHECK_THROWS_AS(build_library(StateMatrix(0, 3), 2), std::invalid_argument);
}

TEST_CASE("build_library matches per-entry evaluation oracle") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  StateMatrix states(20, 3);
  for (Eigen::Index i = 0; i < states.size(); ++i) {
    states(i / 3, i % 3) = u(rng);
  }
  Eigen::MatrixXd design = build_library(states, 2);
  CandidateLibrary lib;
  const auto monos = lib.monomials();
  for (Eigen::Index i = 0; i < states.rows(); ++i) {
    for (std::size_t j = 0; j < monos.size(); ++j) {
      double expect = 1.0;
      for (int k = 0; k < monos[j].e0; ++k) expect *= states(i, 0);
      for (int k = 0; k < monos[j].e1; ++k) expect *= states(i, 1);
      for (int k = 0; k < monos[j].e2; ++k) expect *= states(i, 2);
      CHECK(std::abs(design(i, static_cast<Eigen::Index>(j)) - expect) <
            1e-12);
    }
  }
}

namespace {

StateMatrix trajectory_states() {
  PKParameters p;
  return integrate(p, StateVector(1, 0, 0), linspace(0, 10, 100), 10).states;
}

}  // namespace

TEST_CASE("stlsq recovers a single sparse coefficient exactly") {
  StateMatrix states = trajectory_states();
  Eigen::MatrixXd design = build_library(states, 2);
  Eigen::MatrixXd targets = -1.14 * states.col(0);
  SparseModel model = stlsq(design, targets, {0.1, 20, 0.0});
  CHECK(std::abs(model.coefficients(1, 0) + 1.14) < 1e-8);
  model.coefficients(1, 0) = 0.0;
  CHECK(model.coefficients.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("stlsq on zero targets returns all zeros") {
  StateMatrix states = trajectory_states();
  Eigen::MatrixXd design = build_library(states, 2);
  SparseModel model = stlsq(design, Eigen::MatrixXd::Zero(states.rows(), 3));
  CHECK(model.coefficients.cwiseAbs().maxCoeff() == 0.0);
  for (int c = 0; c < 3; ++c) {
    CHECK(to_text(to_expression(model, c)) == "0");
  }
}

TEST_CASE("stlsq recovers the full compartment system from exact data") {
  PKParameters p;
  StateMatrix states = trajectory_states();
  Eigen::MatrixXd targets(states.rows(), 3);
  for (Eigen::Index i = 0; i < states.rows(); ++i) {
    targets.row(i) = rhs(p, states.row(i).transpose()).transpose();
  }
  SparseModel model = stlsq(build_library(states, 2), targets);

  auto coeff = [&](int basis, int comp) {
    return model.coefficients(basis, comp);
  };
  // Component 0: -ka * X0.
  CHECK(coeff(1, 0) == doctest::Approx(-1.14).epsilon(0.01));
  // Component 1: ka*X0 - ((cl+q)/v1)*X1 + (q/v2)*X2.
  CHECK(coeff(1, 1) == doctest::Approx(1.14).epsilon(0.01));
  CHECK(coeff(2, 1) == doctest::Approx(-10.3744).epsilon(0.01));
  CHECK(coeff(3, 1) == doctest::Approx(0.39721).epsilon(0.01));
  // Component 2: (q/v1)*X1 - (q/v2)*X2.
  CHECK(coeff(2, 2) == doctest::Approx(2.5110).epsilon(0.01));
  CHECK(coeff(3, 2) == doctest::Approx(-0.39721).epsilon(0.01));

  // Exact supports.
  for (int c = 0; c < 3; ++c) {
    for (int b = 0; b < 10; ++b) {
      const bool in_truth = (c == 0 && b == 1) ||
                            (c == 1 && (b == 1 || b == 2 || b == 3)) ||
                            (c == 2 && (b == 2 || b == 3));
      CHECK((coeff(b, c) != 0.0) == in_truth);
    }
  }
}

TEST_CASE("stlsq support never grows and survivors clear the threshold") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  StateMatrix states(60, 3);
  for (Eigen::Index i = 0; i < states.size(); ++i) {
    states(i / 3, i % 3) = u(rng);
  }
  Eigen::MatrixXd design = build_library(states, 2);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd truth = Eigen::VectorXd::Zero(10);
    for (int k = 0; k < 3; ++k) {
      truth[std::uniform_int_distribution<int>(0, 9)(rng)] =
          u(rng) * 2.0 + (u(rng) > 0 ? 0.5 : -0.5);
    }
    Eigen::MatrixXd target = design * truth;
    const double threshold = 0.2;
    SparseModel model = stlsq(design, target, {threshold, 20, 0.0});
    for (int b = 0; b < 10; ++b) {
      const double c = model.coefficients(b, 0);
      if (c != 0.0) CHECK(std::abs(c) >= threshold);
    }
    // Exact recovery whenever every true coefficient clears 2x threshold.
    bool all_strong = true;
    for (int b = 0; b < 10; ++b) {
      if (truth[b] != 0.0 && std::abs(truth[b]) < 2 * threshold) {
        all_strong = false;
      }
    }
    if (all_strong) {
      CHECK((model.coefficients.col(0) - truth).cwiseAbs().maxCoeff() < 1e-6);
    }
  }
}

TEST_CASE("rank-deficient designs need ridge") {
  // 5 rows, 10 columns: necessarily rank deficient.
  StateMatrix states = trajectory_states().topRows(5);
  Eigen::MatrixXd design = build_library(states, 2);
  Eigen::MatrixXd targets = -1.14 * states.col(0);
  CHECK_THROWS_AS(stlsq(design, targets, {0.1, 20, 0.0}),
                  IllConditionedError);
  // Ridge shoulders through.
  SparseModel model = stlsq(design, targets, {0.1, 20, 1e-8});
  CHECK(model.coefficients.rows() == 10);
}

TEST_CASE("stlsq input validation") {
  StateMatrix states = trajectory_states();
  Eigen::MatrixXd design = build_library(states, 2);
  CHECK_THROWS_AS(stlsq(design, Eigen::MatrixXd::Zero(3, 1), {0.1, 20, 0.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      stlsq(design, Eigen::MatrixXd::Zero(design.rows(), 1), {0.0, 20, 0.0}),
      std::invalid_argument);
}

TEST_CASE("to_expression mirrors the sparse coefficients") {
  StateMatrix states = trajectory_states();
  Eigen::MatrixXd design = build_library(states, 2);
  Eigen::MatrixXd targets =
      2.2 * states.col(1) - 0.4 * states.col(2);
  SparseModel model = stlsq(design, targets, {0.1, 20, 0.0});
  Expression e = to_expression(model, 0);
  CHECK(to_text(e) == "2.2*X1 - 0.4*X2");
  // Evaluation agrees with the design-matrix product.
  Eigen::VectorXd via_design = design * model.coefficients.col(0);
  Eigen::VectorXd via_tree = e.eval_rows(states);
  CHECK((via_design - via_tree).cwiseAbs().maxCoeff() < 1e-12);
}
