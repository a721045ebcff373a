#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "pkinn/errors.hpp"
#include "pkinn/evaluation.hpp"

using namespace pkinn;

namespace {

NoisyDataset test_region_dataset() {
  PKParameters p;
  Trajectory traj = integrate(p, StateVector(1, 0, 0), linspace(8, 10, 20), 10);
  return add_noise(traj, 0.005, 42);
}

PKINNModel tiny_model(std::uint64_t seed) {
  return make_model(PkinnMode::kBlackbox, seed, {6}, {6});
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("extrapolation mse on exact and offset predictions") {
  NoisyDataset test = test_region_dataset();
  PKINNModel model = tiny_model(1);

  // Model output as its own target: zero error.
  NoisyDataset fitted = test;
  fitted.noisy = predict(model, test.noisy.times);
  fitted.clean = fitted.noisy;
  ExtrapolationReport r = extrapolation_mse(model, fitted);
  for (int j = 0; j < 3; ++j) {
    CHECK(r.mse_noisy[j] == 0.0);
    CHECK(r.mse_clean[j] == 0.0);
  }

  // Constant offset of 0.01 on x0 only.
  NoisyDataset offset = fitted;
  offset.noisy.states.col(0).array() += 0.01;
  r = extrapolation_mse(model, offset);
  CHECK(r.mse_noisy[0] == doctest::Approx(1e-4).epsilon(1e-10));
  CHECK(r.mse_noisy[1] == 0.0);
  CHECK(r.mse_noisy[2] == 0.0);

  NoisyDataset empty;
  CHECK_THROWS_AS(extrapolation_mse(model, empty), std::invalid_argument);
}

TEST_CASE("extrapolation mse equals a two-loop oracle") {
  NoisyDataset test = test_region_dataset();
  PKINNModel model = tiny_model(2);
  ExtrapolationReport r = extrapolation_mse(model, test);
  Trajectory pred = predict(model, test.noisy.times);
  for (int j = 0; j < 3; ++j) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < test.noisy.size(); ++i) {
      const double e = pred.states(i, j) - test.noisy.states(i, j);
      acc += e * e;
    }
    acc /= static_cast<double>(test.noisy.size());
    CHECK(std::abs(r.mse_noisy[j] - acc) < 1e-12);
  }
}

TEST_CASE("derivative agreement on an exact surrogate is the identity line") {
  // Both columns evaluate the reference right-hand side along the exact
  // trajectory: r and slope must be 1 up to integration error.
  PKParameters p;
  Trajectory fine = integrate(p, StateVector(1, 0, 0), linspace(0, 8, 400), 10);
  auto state_at = [&](double t) -> StateVector {
    Eigen::Index i = 0;
    (fine.times.array() - t).abs().minCoeff(&i);
    return fine.states.row(i).transpose();
  };
  DerivativeAgreement da = derivative_agreement(
      [&](double t) { return rhs(p, state_at(t)); },
      [&](double t) { return rhs(p, state_at(t)); }, fine.times);
  for (int j = 0; j < 3; ++j) {
    CHECK(da.pearson_r[j] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(da.slope[j] == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("zero predictor gives zero slope and degenerate r of 0") {
  PKINNModel model = tiny_model(3);
  for (auto& w : model.f_net.weights) w.setZero();
  DerivativeAgreement da = derivative_agreement(model, linspace(0, 8, 50));
  for (int j = 0; j < 3; ++j) {
    CHECK(da.predicted.col(j).cwiseAbs().maxCoeff() == 0.0);
    CHECK(da.slope[j] == 0.0);
    CHECK(da.pearson_r[j] == 0.0);
  }
  CHECK_THROWS_AS(
      derivative_agreement(model, Eigen::VectorXd::Constant(1, 1.0)),
      std::invalid_argument);
}

TEST_CASE("pearson matches the covariance formula oracle") {
  PKINNModel model = tiny_model(4);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (auto& b : model.x_net.biases) {
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = u(rng);
  }
  Eigen::VectorXd grid = linspace(0, 8, 60);
  DerivativeAgreement da = derivative_agreement(model, grid);
  for (int j = 0; j < 3; ++j) {
    const Eigen::Index n = grid.size();
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double x = da.calculated(i, j);
      const double y = da.predicted(i, j);
      sx += x;
      sy += y;
      sxx += x * x;
      syy += y * y;
      sxy += x * y;
    }
    const double cov = sxy / n - (sx / n) * (sy / n);
    const double vx = sxx / n - (sx / n) * (sx / n);
    const double vy = syy / n - (sy / n) * (sy / n);
    CHECK(std::abs(da.pearson_r[j] - cov / std::sqrt(vx * vy)) < 1e-10);
    CHECK(da.pearson_r[j] >= -1.0);
    CHECK(da.pearson_r[j] <= 1.0);
  }
}

TEST_CASE("finite difference derivatives track the rhs") {
  PKParameters p;
  Trajectory traj = integrate(p, StateVector(1, 0, 0), linspace(0, 8, 801), 4);
  StateMatrix fd = finite_difference_derivatives(traj);
  for (Eigen::Index i = 10; i < traj.size() - 10; i += 50) {
    StateVector expect = rhs(p, traj.states.row(i).transpose());
    CHECK((fd.row(i).transpose() - expect).cwiseAbs().maxCoeff() < 1e-3);
  }
}

namespace {

Expression times(double c, int var) {
  return Expression::binary(ExprOp::kMul, Expression::constant(c),
                            Expression::variable(var));
}

}  // namespace

TEST_CASE("compare_expressions structural checks") {
  PKParameters truth;

  SUBCASE("exact recovery matches with zero deltas") {
    std::array<Expression, 3> recovered = {
        times(-1.14, 0),
        Expression::binary(
            ExprOp::kAdd,
            Expression::binary(ExprOp::kSub, times(1.14, 0),
                               times(10.374449339207048, 1)),
            times(0.3972125435540069, 2)),
        Expression::binary(ExprOp::kSub, times(2.5110132158590304, 1),
                           times(0.3972125435540069, 2))};
    ExpressionComparison cmp = compare_expressions(recovered, truth);
    CHECK(cmp.nonlinear_count == 0);
    for (int c = 0; c < 3; ++c) {
      CHECK(cmp.components[c].linear);
      CHECK(cmp.components[c].support_match);
      for (int v = 0; v < 3; ++v) {
        CHECK(std::abs(cmp.components[c].coefficient_delta[v]) < 1e-9);
      }
    }
    CHECK(cmp.components[0].support == std::array<bool, 3>{true, false, false});
  }

  SUBCASE("sign error keeps support but shows in the delta") {
    std::array<Expression, 3> recovered = {
        times(-1.14, 0),
        Expression::binary(
            ExprOp::kAdd,
            Expression::binary(ExprOp::kAdd, times(1.14, 0),
                               times(10.374449339207048, 1)),
            times(0.3972125435540069, 2)),
        Expression::binary(ExprOp::kSub, times(2.5110132158590304, 1),
                           times(0.3972125435540069, 2))};
    ExpressionComparison cmp = compare_expressions(recovered, truth);
    CHECK(cmp.components[1].support_match);
    CHECK(std::abs(cmp.components[1].coefficient_delta[1] -
                   2 * 10.374449339207048) < 1e-9);
  }

  SUBCASE("wrong support flagged") {
    std::array<Expression, 3> recovered = {times(-1.1, 0), times(0.4, 0),
                                           times(0.2, 0)};
    ExpressionComparison cmp = compare_expressions(recovered, truth);
    // Component 2 true support is {X1, X2}, recovered is {X0}.
    CHECK(!cmp.components[2].support_match);
    CHECK(cmp.components[2].support == std::array<bool, 3>{true, false, false});
    CHECK(cmp.components[2].true_support ==
          std::array<bool, 3>{false, true, true});
  }

  SUBCASE("quadratic flagged nonlinear") {
    Expression quad = Expression::binary(
        ExprOp::kMul,
        Expression::binary(ExprOp::kAdd, Expression::constant(-0.6),
                           Expression::variable(0)),
        Expression::variable(0));
    std::array<Expression, 3> recovered = {times(-1.1, 0), quad,
                                           times(2.3, 1)};
    ExpressionComparison cmp = compare_expressions(recovered, truth);
    CHECK(cmp.components[0].linear);
    CHECK(!cmp.components[1].linear);
    CHECK(cmp.components[2].linear);
    CHECK(cmp.nonlinear_count == 1);
  }

  SUBCASE("invariant under simplify") {
    Expression messy = Expression::binary(
        ExprOp::kAdd,
        Expression::binary(ExprOp::kMul, Expression::constant(1.0),
                           times(-1.14, 0)),
        Expression::constant(0.0));
    std::array<Expression, 3> a = {messy, times(1.0, 1), times(1.0, 2)};
    std::array<Expression, 3> b = {simplify(messy), times(1.0, 1),
                                   times(1.0, 2)};
    ExpressionComparison ca = compare_expressions(a, truth);
    ExpressionComparison cb = compare_expressions(b, truth);
    for (int c = 0; c < 3; ++c) {
      CHECK(ca.components[c].linear == cb.components[c].linear);
      CHECK(ca.components[c].support == cb.components[c].support);
      CHECK(ca.components[c].coefficient_delta ==
            cb.components[c].coefficient_delta);
    }
  }
}

TEST_CASE("export_run file contract and determinism") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "pkinn_export_test";
  fs::remove_all(dir);

  SUBCASE("empty artifacts produce only a manifest") {
    RunArtifacts artifacts;
    auto files = export_run(artifacts, dir.string());
    CHECK(files == std::vector<std::string>{"manifest.txt"});
    CHECK(fs::exists(dir / "manifest.txt"));
    CHECK(slurp(dir / "manifest.txt").empty());
  }

  SUBCASE("full artifact set and byte-identical re-export") {
    PKParameters p;
    Trajectory traj =
        integrate(p, StateVector(1, 0, 0), linspace(0, 10, 40), 10);
    NoisyDataset ds = add_noise(traj, 0.01, 5);
    PKINNModel model = tiny_model(6);

    RunArtifacts artifacts;
    artifacts.dataset = ds;
    artifacts.predictions = predict(model, ds.clean.times);
    artifacts.t_split = 8.0;
    auto [train, test] = split_train_test(ds, 8.0);
    artifacts.extrapolation = extrapolation_mse(model, test);
    artifacts.derivatives = derivative_agreement(model, train.noisy.times);
    artifacts.discovery_text = "method stlsq\nf1 = -1.1*X0\n";

    auto files = export_run(artifacts, dir.string());
    // 3 derivative CSVs + curves + extrapolation + discovery + manifest.
    CHECK(files.size() == 7);
    for (const std::string& f : files) CHECK(fs::exists(dir / f));

    std::map<std::string, std::string> before;
    for (const std::string& f : files) before[f] = slurp(dir / f);
    auto again = export_run(artifacts, dir.string());
    CHECK(again == files);
    for (const std::string& f : files) CHECK(slurp(dir / f) == before[f]);

    // Curves CSV header and split flags.
    std::istringstream curves(slurp(dir / "curves.csv"));
    std::string header;
    std::getline(curves, header);
    CHECK(header ==
          "t,x0_clean,x1_clean,x2_clean,x0_noisy,x1_noisy,x2_noisy,"
          "x0_pred,x1_pred,x2_pred,split");
    int train_rows = 0, test_rows = 0;
    std::string line;
    while (std::getline(curves, line)) {
      if (line.ends_with(",train")) ++train_rows;
      if (line.ends_with(",test")) ++test_rows;
    }
    CHECK(train_rows == train.noisy.size());
    CHECK(test_rows == test.noisy.size());
  }

  fs::remove_all(dir);
}
