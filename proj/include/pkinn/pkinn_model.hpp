#ifndef PKINN_PKINN_MODEL_HPP
#define PKINN_PKINN_MODEL_HPP

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "pkinn/network.hpp"
#include "pkinn/pk_model.hpp"

namespace pkinn {

enum class PkinnMode : std::uint8_t { kBlackbox, kParametric };

std::string to_string(PkinnMode mode);
PkinnMode mode_from_string(const std::string& name);

struct LossWeights {
  double data = 1.0;
  double ode = 2.0;
  double ic = 1.0;
};

// Two coupled networks: x_net maps time to the three compartment states,
// f_net maps (t, x0, x1, x2) to the state derivatives. In parametric mode
// f_net is ignored and the structural compartment form is used with the
// five learnable rate constants (all start at 1).
struct PKINNModel {
  DenseNetwork x_net;
  DenseNetwork f_net;
  std::array<double, 5> learnable{1.0, 1.0, 1.0, 1.0, 1.0};  // ka,cl,q,v1,v2
  PkinnMode mode = PkinnMode::kBlackbox;
  LossWeights loss_weights;
};

PKINNModel make_model(PkinnMode mode, std::uint64_t seed,
                      std::vector<int> x_hidden = {100, 100},
                      std::vector<int> f_hidden = {100, 100, 100});

struct TrainConfig {
  int epochs = 1000;
  double learning_rate = 1e-2;
  std::uint64_t seed = 0;
  Eigen::VectorXd collocation_times;  // empty -> use the training grid
  StateVector initial_condition{1.0, 0.0, 0.0};
  PkinnMode mode = PkinnMode::kBlackbox;
};

struct TrainReport {
  // One row per epoch: loss before that epoch's update.
  Eigen::MatrixXd loss_trace;   // epochs x 4 (total, data, ode, ic)
  Eigen::MatrixXd param_trace;  // epochs x 5, values after the update
  std::array<double, 5> final_params{};
  double wall_seconds = 0.0;
};

struct LossBreakdown {
  double total = 0.0;
  double data = 0.0;
  double ode = 0.0;
  double ic = 0.0;
};

// Predicted derivatives: f_net(t, x) in blackbox mode, the compartment
// right-hand side with the learnable constants in parametric mode.
StateVector f_predict(const PKINNModel& model, double t,
                      const StateVector& x);

// Row n = d x_net/dt (t_n) - f_predict(t_n, x_net(t_n)).
StateMatrix ode_residuals(const PKINNModel& model,
                          const Eigen::VectorXd& t_colloc);

// Residuals for an arbitrary state surrogate; used by oracle checks that
// swap x_net for an exact interpolant.
StateMatrix ode_residuals(const std::function<StateVector(double)>& state_fn,
                          const std::function<StateVector(double)>& deriv_fn,
                          const std::function<StateVector(double, const StateVector&)>& f_fn,
                          const Eigen::VectorXd& t_colloc);

// Mean over collocation points of the summed squared component residuals.
double loss_ode(const StateMatrix& residuals);

// Euclidean norm (not its square) of x_init - x_net(t0).
double loss_ic(const PKINNModel& model, const StateVector& x_init, double t0);

// Mean over all points and components of the squared data misfit.
double loss_data(const PKINNModel& model, const NoisyDataset& train);

LossBreakdown loss_total(const PKINNModel& model, const NoisyDataset& train,
                         const TrainConfig& config);

// Loss value plus the exact gradient w.r.t. the flat parameter vector
// (x_net layers, f_net layers, then the five learnable scalars).
std::pair<LossBreakdown, Eigen::VectorXd> loss_and_gradients(
    const PKINNModel& model, const NoisyDataset& train,
    const TrainConfig& config);

// Full-batch Adam on the total loss. Deterministic given (model, data,
// config). Throws DivergedError if the loss turns non-finite.
std::pair<PKINNModel, TrainReport> train(const PKINNModel& model,
                                         const NoisyDataset& data,
                                         const TrainConfig& config);

// x_net evaluated on the grid (valid outside the training range).
Trajectory predict(const PKINNModel& model, const Eigen::VectorXd& t_grid);

// Flat parameter vector helpers (layout as in loss_and_gradients).
Eigen::VectorXd pack_parameters(const PKINNModel& model);
void unpack_parameters(const Eigen::VectorXd& flat, PKINNModel& model);

void write_model(const PKINNModel& model, const std::string& path);
PKINNModel read_model(const std::string& path);

void write_train_report_csv(const TrainReport& report, const std::string& path);

}  // namespace pkinn

#endif  // PKINN_PKINN_MODEL_HPP
