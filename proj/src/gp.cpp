#include "pkinn/gp.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace pkinn {

void validate(const GPConfig& config) {
  if (config.population < 2) {
    throw std::invalid_argument("GPConfig: population must be >= 2");
  }
  if (config.generations < 1 || config.max_size < 1 ||
      config.tournament < 1) {
    throw std::invalid_argument("GPConfig: counts must be positive");
  }
  for (double rate : {config.crossover_rate, config.mutation_rate}) {
    if (rate < 0.0 || rate > 1.0) {
      throw std::invalid_argument("GPConfig: rates must lie in [0,1]");
    }
  }
  if (config.crossover_rate + config.mutation_rate > 1.0) {
    throw std::invalid_argument(
        "GPConfig: crossover_rate + mutation_rate must be <= 1");
  }
}

namespace {

using Rng = std::mt19937_64;

ExprPtr random_leaf(Rng& rng) {
  auto node = std::make_unique<ExprNode>();
  if (std::uniform_real_distribution<double>(0, 1)(rng) < 0.5) {
    node->op = ExprOp::kVar;
    node->var = std::uniform_int_distribution<int>(0, 2)(rng);
  } else {
    node->op = ExprOp::kConst;
    node->value = std::uniform_real_distribution<double>(-2.0, 2.0)(rng);
  }
  return node;
}

ExprPtr random_tree(Rng& rng, int depth) {
  if (depth <= 0 ||
      std::uniform_real_distribution<double>(0, 1)(rng) < 0.25) {
    return random_leaf(rng);
  }
  auto node = std::make_unique<ExprNode>();
  const ExprOp ops[3] = {ExprOp::kAdd, ExprOp::kSub, ExprOp::kMul};
  node->op = ops[std::uniform_int_distribution<int>(0, 2)(rng)];
  node->left = random_tree(rng, depth - 1);
  node->right = random_tree(rng, depth - 1);
  return node;
}

void collect_slots(ExprPtr& slot, std::vector<ExprPtr*>& out) {
  out.push_back(&slot);
  if (slot->left) collect_slots(slot->left, out);
  if (slot->right) collect_slots(slot->right, out);
}

void collect_constants(ExprNode& node, std::vector<ExprNode*>& out) {
  if (node.op == ExprOp::kConst) out.push_back(&node);
  if (node.left) collect_constants(*node.left, out);
  if (node.right) collect_constants(*node.right, out);
}

// Value and exact partials w.r.t. each constant leaf, one forward pass.
double eval_with_const_grad(const ExprNode& node, const StateVector& x,
                            const std::vector<const ExprNode*>& index,
                            Eigen::VectorXd& grad) {
  switch (node.op) {
    case ExprOp::kConst: {
      grad.setZero();
      for (std::size_t k = 0; k < index.size(); ++k) {
        if (index[k] == &node) {
          grad[static_cast<Eigen::Index>(k)] = 1.0;
          break;
        }
      }
      return node.value;
    }
    case ExprOp::kVar:
      grad.setZero();
      return x[node.var];
    default: {
      Eigen::VectorXd gl(grad.size()), gr(grad.size());
      const double l = eval_with_const_grad(*node.left, x, index, gl);
      const double r = eval_with_const_grad(*node.right, x, index, gr);
      if (node.op == ExprOp::kAdd) {
        grad = gl + gr;
        return l + r;
      }
      if (node.op == ExprOp::kSub) {
        grad = gl - gr;
        return l - r;
      }
      grad = r * gl + l * gr;  // product rule
      return l * r;
    }
  }
}

double mse_of(const Expression& expr, const StateMatrix& states,
              const Eigen::VectorXd& targets) {
  const Eigen::VectorXd pred = expr.eval_rows(states);
  const double m = (pred - targets).squaredNorm() /
                   static_cast<double>(targets.size());
  return std::isfinite(m) ? m : std::numeric_limits<double>::infinity();
}

// A few Gauss-Newton steps on the constant leaves; keeps only improvements.
double refine_constants(Expression& expr, const StateMatrix& states,
                        const Eigen::VectorXd& targets) {
  std::vector<ExprNode*> consts;
  collect_constants(const_cast<ExprNode&>(expr.root()), consts);
  double best = mse_of(expr, states, targets);
  if (consts.empty() || !std::isfinite(best)) return best;

  const Eigen::Index n_rows = states.rows();
  const Eigen::Index n_c = static_cast<Eigen::Index>(consts.size());
  std::vector<const ExprNode*> index(consts.begin(), consts.end());

  for (int iter = 0; iter < 3; ++iter) {
    Eigen::MatrixXd jac(n_rows, n_c);
    Eigen::VectorXd residual(n_rows);
    Eigen::VectorXd grad(n_c);
    for (Eigen::Index i = 0; i < n_rows; ++i) {
      const double value = eval_with_const_grad(
          expr.root(), states.row(i).transpose(), index, grad);
      residual[i] = value - targets[i];
      jac.row(i) = grad.transpose();
    }
    const Eigen::MatrixXd gram =
        jac.transpose() * jac +
        1e-10 * Eigen::MatrixXd::Identity(n_c, n_c);
    const Eigen::VectorXd delta =
        gram.ldlt().solve(-jac.transpose() * residual);
    if (!delta.allFinite()) break;

    std::vector<double> saved(consts.size());
    for (std::size_t k = 0; k < consts.size(); ++k) {
      saved[k] = consts[k]->value;
      consts[k]->value += delta[static_cast<Eigen::Index>(k)];
    }
    const double updated = mse_of(expr, states, targets);
    if (updated < best) {
      best = updated;
    } else {
      for (std::size_t k = 0; k < consts.size(); ++k) {
        consts[k]->value = saved[k];
      }
      break;
    }
  }
  return best;
}

struct Individual {
  Expression expr;
  double mse = std::numeric_limits<double>::infinity();
  double fitness = std::numeric_limits<double>::infinity();
};

Individual make_individual(Expression expr, const StateMatrix& states,
                           const Eigen::VectorXd& targets,
                           const GPConfig& config) {
  Individual ind;
  ind.expr = std::move(expr);
  ind.mse = refine_constants(ind.expr, states, targets);
  ind.fitness = ind.mse + config.parsimony * ind.expr.size();
  return ind;
}

const Individual& tournament_select(const std::vector<Individual>& pop,
                                    const GPConfig& config, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, pop.size() - 1);
  const Individual* best = &pop[pick(rng)];
  for (int k = 1; k < config.tournament; ++k) {
    const Individual& other = pop[pick(rng)];
    if (other.fitness < best->fitness) best = &other;
  }
  return *best;
}

Expression crossover(const Expression& a, const Expression& b, Rng& rng) {
  Expression child = a;
  Expression donor = b;
  std::vector<ExprPtr*> slots_child, slots_donor;
  collect_slots(child.root_slot(), slots_child);
  collect_slots(donor.root_slot(), slots_donor);
  ExprPtr* target = slots_child[std::uniform_int_distribution<std::size_t>(
      0, slots_child.size() - 1)(rng)];
  ExprPtr* source = slots_donor[std::uniform_int_distribution<std::size_t>(
      0, slots_donor.size() - 1)(rng)];
  *target = std::move(*source);
  return child;
}

Expression mutate(const Expression& a, Rng& rng) {
  Expression child = a;
  std::vector<ExprPtr*> slots;
  collect_slots(child.root_slot(), slots);
  ExprPtr* target = slots[std::uniform_int_distribution<std::size_t>(
      0, slots.size() - 1)(rng)];
  std::uniform_real_distribution<double> u(0, 1);
  if (u(rng) < 0.5) {
    *target = random_tree(rng, 2);  // subtree mutation
    return child;
  }
  // Point mutation.
  ExprNode& node = **target;
  switch (node.op) {
    case ExprOp::kConst:
      node.value += std::normal_distribution<double>(0.0, 0.5)(rng);
      break;
    case ExprOp::kVar:
      node.var = std::uniform_int_distribution<int>(0, 2)(rng);
      break;
    default: {
      const ExprOp ops[3] = {ExprOp::kAdd, ExprOp::kSub, ExprOp::kMul};
      node.op = ops[std::uniform_int_distribution<int>(0, 2)(rng)];
      break;
    }
  }
  return child;
}

}  // namespace

GPResult gp_regress_full(const StateMatrix& states,
                         const Eigen::VectorXd& targets,
                         const GPConfig& config) {
  validate(config);
  if (states.rows() == 0 || states.rows() != targets.size()) {
    throw std::invalid_argument("gp_regress: empty or mismatched data");
  }
  Rng rng(config.seed);

  std::vector<Individual> population;
  population.reserve(config.population);
  for (int i = 0; i < config.population; ++i) {
    // Ramped initial depths cycle through 1..4.
    Expression expr(random_tree(rng, 1 + i % 4));
    while (expr.size() > config.max_size) {
      expr = Expression(random_tree(rng, 1 + i % 4));
    }
    population.push_back(
        make_individual(std::move(expr), states, targets, config));
  }

  auto best_index = [&population] {
    std::size_t best = 0;
    for (std::size_t i = 1; i < population.size(); ++i) {
      if (population[i].fitness < population[best].fitness) best = i;
    }
    return best;
  };

  GPResult result;
  result.best_fitness_per_generation.resize(config.generations);

  for (int gen = 0; gen < config.generations; ++gen) {
    std::vector<Individual> next;
    next.reserve(config.population);
    next.push_back(population[best_index()]);  // elitism

    std::uniform_real_distribution<double> u(0, 1);
    while (static_cast<int>(next.size()) < config.population) {
      const double roll = u(rng);
      Expression child;
      if (roll < config.crossover_rate) {
        const Individual& a = tournament_select(population, config, rng);
        const Individual& b = tournament_select(population, config, rng);
        child = crossover(a.expr, b.expr, rng);
        if (child.size() > config.max_size) child = a.expr;  // size guard
      } else if (roll < config.crossover_rate + config.mutation_rate) {
        const Individual& a = tournament_select(population, config, rng);
        child = mutate(a.expr, rng);
        if (child.size() > config.max_size) child = a.expr;
      } else {
        child = tournament_select(population, config, rng).expr;
      }
      next.push_back(make_individual(std::move(child), states, targets, config));
    }
    population = std::move(next);
    result.best_fitness_per_generation[gen] =
        population[best_index()].fitness;
  }

  Individual& best = population[best_index()];
  result.expression = std::move(best.expr);
  result.mse = best.mse;
  result.fitness = best.fitness;
  return result;
}

Expression gp_regress(const StateMatrix& states, const Eigen::VectorXd& targets,
                      const GPConfig& config) {
  return gp_regress_full(states, targets, config).expression;
}

}  // namespace pkinn
