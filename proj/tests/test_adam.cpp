#include <cmath>

#include "doctest.h"
#include "pkinn/adam.hpp"
#include "pkinn/errors.hpp"

using namespace pkinn;

TEST_CASE("first adam step moves by exactly the learning rate") {
  AdamState state(0.01);
  Eigen::VectorXd p = Eigen::VectorXd::Constant(1, 1.0);
  Eigen::VectorXd g = Eigen::VectorXd::Constant(1, 1.0);
  adam_step(state, p, g);
  // Bias correction makes the first update lr * g/|g| up to epsilon.
  CHECK(std::abs(p[0] - 0.99) < 1e-9);
  CHECK(state.step_count == 1);
}

TEST_CASE("zero gradients leave parameters unchanged") {
  AdamState state(0.1);
  Eigen::VectorXd p(3);
  p << 1.0, -2.0, 0.5;
  const Eigen::VectorXd before = p;
  adam_step(state, p, Eigen::VectorXd::Zero(3));
  CHECK(p == before);
  CHECK(state.step_count == 1);
  adam_step(state, p, Eigen::VectorXd::Zero(3));
  CHECK(p == before);
  CHECK(state.step_count == 2);
}

TEST_CASE("identical runs give bit-identical sequences") {
  auto run = [] {
    AdamState state(0.05);
    Eigen::VectorXd p(2);
    p << 0.7, -0.3;
    for (int i = 0; i < 50; ++i) {
      Eigen::VectorXd g(2);
      g << 2.0 * (p[0] - 3.0), std::sin(p[1]);
      adam_step(state, p, g);
    }
    return p;
  };
  CHECK(run() == run());
}

TEST_CASE("adam minimizes a quadratic") {
  AdamState state(0.1);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(1);
  for (int i = 0; i < 1000; ++i) {
    Eigen::VectorXd g = 2.0 * (p.array() - 3.0).matrix();
    adam_step(state, p, g);
  }
  CHECK(p[0] == doctest::Approx(3.0).epsilon(1e-4));
}

TEST_CASE("shape mismatches throw") {
  AdamState state;
  Eigen::VectorXd p(3);
  p.setOnes();
  CHECK_THROWS_AS(adam_step(state, p, Eigen::VectorXd::Ones(2)), ShapeError);
  adam_step(state, p, Eigen::VectorXd::Ones(3));
  Eigen::VectorXd q(2);
  q.setOnes();
  CHECK_THROWS_AS(adam_step(state, q, Eigen::VectorXd::Ones(2)), ShapeError);
}
