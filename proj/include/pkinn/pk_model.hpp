#ifndef PKINN_PK_MODEL_HPP
#define PKINN_PK_MODEL_HPP

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace pkinn {

using StateVector = Eigen::Vector3d;
using StateMatrix = Eigen::Matrix<double, Eigen::Dynamic, 3>;

// Rate constants of the two-compartment absorption model.
// Defaults are the reference parameterization used throughout.
struct PKParameters {
  double ka = 1.14;   // absorption rate [1/time]
  double cl = 3.57;   // elimination clearance [volume/time]
  double q = 1.14;    // inter-compartment distribution [volume/time]
  double v1 = 0.454;  // central volume [volume]
  double v2 = 2.87;   // peripheral volume [volume]
};

// Throws std::invalid_argument unless all five constants are positive.
void validate(const PKParameters& params);

struct Trajectory {
  Eigen::VectorXd times;  // strictly increasing
  StateMatrix states;     // one row per time point

  Eigen::Index size() const { return times.size(); }
};

struct NoisyDataset {
  Trajectory clean;
  Trajectory noisy;  // same time grid as clean
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
};

// Right-hand side of the compartment system:
//   dx0/dt = -ka*x0
//   dx1/dt =  ka*x0 - ((cl+q)/v1)*x1 + (q/v2)*x2
//   dx2/dt =  (q/v1)*x1 - (q/v2)*x2
StateVector rhs(const PKParameters& params, const StateVector& state);

namespace detail {
// Same expression as rhs() but on raw rate constants, no validation.
// The parametric predictor reuses it so the two paths agree bit-exactly.
StateVector compartment_rhs(double ka, double cl, double q, double v1,
                            double v2, const StateVector& x);
}  // namespace detail

// Classical RK4 over the given grid, `substeps` internal steps per
// interval. states.row(0) == x_init. Throws on a non-increasing grid.
Trajectory integrate(const PKParameters& params, const StateVector& x_init,
                     const Eigen::VectorXd& t_grid, int substeps = 1);

// Adds i.i.d. N(0, sigma^2) noise to every state entry, row-major draw
// order, deterministic in `seed`. sigma == 0 copies the trajectory
// bit-exactly.
NoisyDataset add_noise(const Trajectory& traj, double sigma,
                       std::uint64_t seed);

// Points with t < t_split go to the first dataset, t >= t_split to the
// second. t_split must lie within [times.front(), times.back()].
std::pair<NoisyDataset, NoisyDataset> split_train_test(const NoisyDataset& ds,
                                                       double t_split);

Eigen::VectorXd linspace(double a, double b, int n);

// CSV with header "t,x0,x1,x2", one row per time point, round-trip exact.
void write_trajectory_csv(const Trajectory& traj, const std::string& path);
Trajectory read_trajectory_csv(const std::string& path);

}  // namespace pkinn

#endif  // PKINN_PK_MODEL_HPP
