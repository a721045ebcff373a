#include "doctest.h"
#include "pkinn/gp.hpp"

using namespace pkinn;

namespace {

StateMatrix trajectory_states() {
  PKParameters p;
  return integrate(p, StateVector(1, 0, 0), linspace(0, 10, 100), 10).states;
}

GPConfig quick_config(std::uint64_t seed) {
  GPConfig config;
  config.population = 60;
  config.generations = 25;
  config.seed = seed;
  return config;
}

}  // namespace

TEST_CASE("gp config validation") {
  GPConfig bad;
  bad.population = 1;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad = GPConfig{};
  bad.mutation_rate = 1.5;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
  bad = GPConfig{};
  bad.crossover_rate = 0.8;
  bad.mutation_rate = 0.3;
  CHECK_THROWS_AS(validate(bad), std::invalid_argument);
}

TEST_CASE("gp fits a constant target") {
  StateMatrix states = trajectory_states();
  Eigen::VectorXd targets = Eigen::VectorXd::Constant(states.rows(), 0.5);
  Expression best = gp_regress(states, targets, quick_config(3));
  Eigen::VectorXd pred = best.eval_rows(states);
  CHECK((pred.array() - 0.5).abs().maxCoeff() < 1e-3);
}

TEST_CASE("gp reproduces an exact variable target") {
  StateMatrix states = trajectory_states();
  Eigen::VectorXd targets = states.col(1);
  Expression best = gp_regress(states, targets, quick_config(4));
  const double mse = (best.eval_rows(states) - targets).squaredNorm() /
                     static_cast<double>(targets.size());
  CHECK(mse < 1e-6);
}

TEST_CASE("gp recovers the decay term as c * X0") {
  StateMatrix states = trajectory_states();
  Eigen::VectorXd targets = -1.14 * states.col(0);
  int hits = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    GPConfig config;  // full defaults: population 200, 100 generations
    config.seed = seed;
    Expression best = gp_regress(states, targets, config);
    const double mse = (best.eval_rows(states) - targets).squaredNorm() /
                       static_cast<double>(targets.size());
    if (mse >= 1e-4) continue;
    // Simplified form must be a single linear X0 term.
    PolynomialForm form = expand(simplify(best));
    double c_x0 = 0.0;
    double residue = 0.0;
    for (const auto& [mono, coeff] : form) {
      if (mono == Monomial{1, 0, 0}) {
        c_x0 = coeff;
      } else {
        residue += std::abs(coeff);
      }
    }
    if (residue < 1e-6 && c_x0 > -1.25 && c_x0 < -1.05) ++hits;
  }
  CHECK(hits >= 4);
}

TEST_CASE("gp is deterministic under a fixed seed") {
  StateMatrix states = trajectory_states();
  Eigen::VectorXd targets = states.col(2);
  GPConfig config = quick_config(11);
  GPResult a = gp_regress_full(states, targets, config);
  GPResult b = gp_regress_full(states, targets, config);
  CHECK(a.mse == b.mse);
  CHECK(a.fitness == b.fitness);
  CHECK(to_text(a.expression, 6) == to_text(b.expression, 6));
  CHECK(a.best_fitness_per_generation == b.best_fitness_per_generation);
}

TEST_CASE("best fitness never worsens between generations") {
  StateMatrix states = trajectory_states();
  Eigen::VectorXd targets =
      0.7 * states.col(0) - 1.3 * states.col(1);
  GPResult result = gp_regress_full(states, targets, quick_config(13));
  const Eigen::VectorXd& trace = result.best_fitness_per_generation;
  for (Eigen::Index g = 1; g < trace.size(); ++g) {
    CHECK(trace[g] <= trace[g - 1]);
  }
  CHECK(result.expression.size() <= GPConfig{}.max_size);
}
