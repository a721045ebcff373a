#ifndef PKINN_GP_HPP
#define PKINN_GP_HPP

#include <cstdint>

#include "pkinn/expression.hpp"
#include "pkinn/pk_model.hpp"

namespace pkinn {

struct GPConfig {
  int population = 200;
  int generations = 100;
  int max_size = 25;          // node count cap
  double parsimony = 1e-3;    // fitness = mse + parsimony * size
  double crossover_rate = 0.9;
  double mutation_rate = 0.1;
  int tournament = 3;
  std::uint64_t seed = 0;
};

void validate(const GPConfig& config);

struct GPResult {
  Expression expression;
  double mse = 0.0;
  double fitness = 0.0;
  Eigen::VectorXd best_fitness_per_generation;
};

// Evolves expression trees over {+, -, *}, variables and constants:
// tournament selection, subtree crossover, point/subtree mutation, and
// Gauss-Newton refinement of each individual's constants against the
// targets. Deterministic given the seed.
GPResult gp_regress_full(const StateMatrix& states,
                         const Eigen::VectorXd& targets,
                         const GPConfig& config);

Expression gp_regress(const StateMatrix& states, const Eigen::VectorXd& targets,
                      const GPConfig& config);

}  // namespace pkinn

#endif  // PKINN_GP_HPP
