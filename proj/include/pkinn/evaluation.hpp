#ifndef PKINN_EVALUATION_HPP
#define PKINN_EVALUATION_HPP

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pkinn/discover.hpp"
#include "pkinn/expression.hpp"
#include "pkinn/pkinn_model.hpp"

namespace pkinn {

struct ExtrapolationReport {
  std::array<double, 3> mse_noisy{};  // against the raw test data
  std::array<double, 3> mse_clean{};  // diagnostic, against the clean states
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

// Per-component mean squared error of predict() against the test set.
ExtrapolationReport extrapolation_mse(const PKINNModel& model,
                                      const NoisyDataset& test);

struct DerivativeAgreement {
  Eigen::VectorXd times;
  StateMatrix calculated;  // d x_net / dt
  StateMatrix predicted;   // f_predict at (t, x_net(t))
  std::array<double, 3> pearson_r{};
  std::array<double, 3> slope{};  // least-squares slope, predicted on calculated
};

DerivativeAgreement derivative_agreement(const PKINNModel& model,
                                         const Eigen::VectorXd& t_grid);

// Generic pairing for oracle checks with substituted surrogates.
DerivativeAgreement derivative_agreement(
    const std::function<StateVector(double)>& calculated_fn,
    const std::function<StateVector(double)>& predicted_fn,
    const Eigen::VectorXd& t_grid);

// Assembles the struct from precomputed columns (r and slope included).
DerivativeAgreement make_derivative_agreement(Eigen::VectorXd times,
                                              StateMatrix calculated,
                                              StateMatrix predicted);

// Central differences of the trajectory rows; the alternative source for
// the "calculated" column when differentiating raw data instead of x_net.
StateMatrix finite_difference_derivatives(const Trajectory& traj);

struct ComponentComparison {
  bool linear = false;
  std::array<bool, 3> support{};        // variables present in the recovery
  std::array<bool, 3> true_support{};   // variables in the reference form
  std::array<double, 3> coefficient_delta{};  // recovered minus true, linear terms
  double constant_term = 0.0;
  bool support_match = false;
};

struct ExpressionComparison {
  std::array<ComponentComparison, 3> components;
  int nonlinear_count = 0;
};

// Structural comparison of recovered component expressions against the
// compartment system with the given constants. Invariant under simplify().
ExpressionComparison compare_expressions(
    const std::array<Expression, 3>& recovered, const PKParameters& truth);

// Everything one run can produce; every piece is optional.
struct RunArtifacts {
  std::optional<NoisyDataset> dataset;      // full grid, clean + noisy
  std::optional<Trajectory> predictions;    // on the same grid
  double t_split = 0.0;                     // train/test boundary for the flag column
  std::optional<ExtrapolationReport> extrapolation;
  std::optional<DerivativeAgreement> derivatives;
  std::optional<std::string> discovery_text;
};

// Writes the plot-ready CSVs plus a manifest into `directory`; returns the
// manifest entries (relative file names). Deterministic byte-for-byte.
std::vector<std::string> export_run(const RunArtifacts& artifacts,
                                    const std::string& directory);

}  // namespace pkinn

#endif  // PKINN_EVALUATION_HPP
