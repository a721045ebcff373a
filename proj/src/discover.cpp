#include "pkinn/discover.hpp"

namespace pkinn {

std::string to_string(SRMethod method) {
  return method == SRMethod::kStlsq ? "stlsq" : "gp";
}

DiscoveryResult discover(const PKINNModel& model, const Eigen::VectorXd& t_grid,
                         const DiscoverSettings& settings) {
  if (t_grid.size() == 0) {
    throw std::invalid_argument("discover: empty sampling grid");
  }
  const Eigen::Index n = t_grid.size();
  StateMatrix states(n, 3);
  StateMatrix targets(n, 3);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = t_grid[i];
    const StateVector x =
        forward(model.x_net, Eigen::VectorXd::Constant(1, t));
    states.row(i) = x.transpose();
    targets.row(i) =
        (settings.target_source == TargetSource::kFPredict
             ? f_predict(model, t, x)
             : StateVector(input_derivative(model.x_net, t)))
            .transpose();
  }

  DiscoveryResult result;
  result.method = settings.method;
  if (settings.method == SRMethod::kStlsq) {
    const Eigen::MatrixXd design =
        build_library(states, settings.library_degree);
    const SparseModel sparse = stlsq(design, targets, settings.stlsq);
    for (int c = 0; c < 3; ++c) {
      result.expressions[c] = to_expression(sparse, c);
      const Eigen::VectorXd pred = result.expressions[c].eval_rows(states);
      result.in_sample_mse[c] =
          (pred - targets.col(c)).squaredNorm() / static_cast<double>(n);
    }
  } else {
    for (int c = 0; c < 3; ++c) {
      GPConfig gp = settings.gp;
      gp.seed = settings.gp.seed + static_cast<std::uint64_t>(c);
      GPResult run = gp_regress_full(states, targets.col(c), gp);
      result.expressions[c] = std::move(run.expression);
      result.in_sample_mse[c] = run.mse;
    }
  }
  return result;
}

}  // namespace pkinn
