#ifndef PKINN_DISCOVER_HPP
#define PKINN_DISCOVER_HPP

#include <array>
#include <string>

#include "pkinn/expression.hpp"
#include "pkinn/gp.hpp"
#include "pkinn/pkinn_model.hpp"
#include "pkinn/stlsq.hpp"

namespace pkinn {

enum class SRMethod : std::uint8_t { kStlsq, kGp };

// What the regression targets are sampled from: the learned right-hand
// side (default) or the time derivative of the state surrogate.
enum class TargetSource : std::uint8_t { kFPredict, kStateDerivative };

struct DiscoverSettings {
  SRMethod method = SRMethod::kStlsq;
  TargetSource target_source = TargetSource::kFPredict;
  int library_degree = 2;
  StlsqSettings stlsq;
  GPConfig gp;
};

struct DiscoveryResult {
  std::array<Expression, 3> expressions;
  std::array<double, 3> in_sample_mse{};
  SRMethod method = SRMethod::kStlsq;
};

// Samples states X = x_net(t) and per-component targets on the grid, then
// runs the chosen regressor per component. GP components use seeds
// gp.seed, gp.seed+1, gp.seed+2.
DiscoveryResult discover(const PKINNModel& model, const Eigen::VectorXd& t_grid,
                         const DiscoverSettings& settings);

std::string to_string(SRMethod method);

}  // namespace pkinn

#endif  // PKINN_DISCOVER_HPP
