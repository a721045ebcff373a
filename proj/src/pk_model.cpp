#include "pkinn/pk_model.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "pkinn/errors.hpp"

namespace pkinn {

void validate(const PKParameters& params) {
  if (!(params.ka > 0.0 && params.cl > 0.0 && params.q > 0.0 &&
        params.v1 > 0.0 && params.v2 > 0.0)) {
    throw std::invalid_argument("PKParameters: all constants must be > 0");
  }
}

namespace detail {

// Shared between rhs() and the parametric predictor so both evaluate the
// identical floating-point expression.
StateVector compartment_rhs(double ka, double cl, double q, double v1,
                            double v2, const StateVector& x) {
  StateVector dx;
  dx[0] = -ka * x[0];
  dx[1] = ka * x[0] - ((cl + q) / v1) * x[1] + (q / v2) * x[2];
  dx[2] = (q / v1) * x[1] - (q / v2) * x[2];
  return dx;
}

}  // namespace detail

StateVector rhs(const PKParameters& params, const StateVector& state) {
  validate(params);
  return detail::compartment_rhs(params.ka, params.cl, params.q, params.v1,
                                 params.v2, state);
}

namespace {

StateVector rk4_step(const PKParameters& params, const StateVector& x,
                     double h) {
  const StateVector k1 = rhs(params, x);
  const StateVector k2 = rhs(params, x + 0.5 * h * k1);
  const StateVector k3 = rhs(params, x + 0.5 * h * k2);
  const StateVector k4 = rhs(params, x + h * k3);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace

Trajectory integrate(const PKParameters& params, const StateVector& x_init,
                     const Eigen::VectorXd& t_grid, int substeps) {
  validate(params);
  if (t_grid.size() == 0) throw InvalidGridError("integrate: empty time grid");
  if (substeps < 1) throw std::invalid_argument("integrate: substeps < 1");
  for (Eigen::Index i = 1; i < t_grid.size(); ++i) {
    if (!(t_grid[i] > t_grid[i - 1])) {
      throw InvalidGridError("integrate: time grid not strictly increasing");
    }
  }

  Trajectory traj;
  traj.times = t_grid;
  traj.states.resize(t_grid.size(), 3);
  StateVector x = x_init;
  traj.states.row(0) = x.transpose();
  for (Eigen::Index i = 1; i < t_grid.size(); ++i) {
    const double h = (t_grid[i] - t_grid[i - 1]) / substeps;
    for (int s = 0; s < substeps; ++s) x = rk4_step(params, x, h);
    traj.states.row(i) = x.transpose();
  }
  return traj;
}

NoisyDataset add_noise(const Trajectory& traj, double sigma,
                       std::uint64_t seed) {
  if (sigma < 0.0) throw std::invalid_argument("add_noise: sigma < 0");
  NoisyDataset ds;
  ds.clean = traj;
  ds.noisy = traj;
  ds.noise_sigma = sigma;
  ds.seed = seed;
  if (sigma == 0.0) return ds;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, sigma);
  for (Eigen::Index i = 0; i < traj.states.rows(); ++i) {
    for (int j = 0; j < 3; ++j) ds.noisy.states(i, j) += gauss(rng);
  }
  return ds;
}

std::pair<NoisyDataset, NoisyDataset> split_train_test(const NoisyDataset& ds,
                                                       double t_split) {
  const Eigen::VectorXd& t = ds.clean.times;
  if (t.size() == 0) throw std::invalid_argument("split: empty dataset");
  if (t_split < t[0] || t_split > t[t.size() - 1]) {
    throw std::invalid_argument("split: t_split outside the time grid range");
  }

  Eigen::Index n_train = 0;
  while (n_train < t.size() && t[n_train] < t_split) ++n_train;

  auto take = [&](Eigen::Index begin, Eigen::Index count) {
    NoisyDataset part;
    part.noise_sigma = ds.noise_sigma;
    part.seed = ds.seed;
    part.clean.times = t.segment(begin, count);
    part.clean.states = ds.clean.states.middleRows(begin, count);
    part.noisy.times = t.segment(begin, count);
    part.noisy.states = ds.noisy.states.middleRows(begin, count);
    return part;
  };
  return {take(0, n_train), take(n_train, t.size() - n_train)};
}

Eigen::VectorXd linspace(double a, double b, int n) {
  if (n < 1) throw std::invalid_argument("linspace: n < 1");
  return Eigen::VectorXd::LinSpaced(n, a, b);
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "t,x0,x1,x2\n";
  char buf[512];
  for (Eigen::Index i = 0; i < traj.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g\n",
                  traj.times[i], traj.states(i, 0), traj.states(i, 1),
                  traj.states(i, 2));
    out << buf;
  }
  if (!out) throw IoError("write failed: " + path);
}

Trajectory read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path, 1, "empty file");
  if (line != "t,x0,x1,x2") throw ParseError(path, 1, "unexpected header");

  std::vector<std::array<double, 4>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::array<double, 4> row{};
    std::stringstream ss(line);
    std::string cell;
    for (int j = 0; j < 4; ++j) {
      if (!std::getline(ss, cell, ',')) {
        throw ParseError(path, lineno, "expected 4 columns");
      }
      try {
        row[j] = std::stod(cell);
      } catch (const std::exception&) {
        throw ParseError(path, lineno, "bad number '" + cell + "'");
      }
    }
    rows.push_back(row);
  }

  Trajectory traj;
  traj.times.resize(static_cast<Eigen::Index>(rows.size()));
  traj.states.resize(static_cast<Eigen::Index>(rows.size()), 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    traj.times[static_cast<Eigen::Index>(i)] = rows[i][0];
    for (int j = 0; j < 3; ++j) {
      traj.states(static_cast<Eigen::Index>(i), j) = rows[i][j + 1];
    }
  }
  for (Eigen::Index i = 1; i < traj.times.size(); ++i) {
    if (!(traj.times[i] > traj.times[i - 1])) {
      throw ParseError(path, static_cast<int>(i) + 2,
                       "time column not strictly increasing");
    }
  }
  return traj;
}

}  // namespace pkinn
