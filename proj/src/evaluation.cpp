#include "pkinn/evaluation.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "pkinn/errors.hpp"

namespace pkinn {

ExtrapolationReport extrapolation_mse(const PKINNModel& model,
                                      const NoisyDataset& test) {
  const Eigen::Index n = test.noisy.size();
  if (n == 0) {
    throw std::invalid_argument("extrapolation_mse: empty test set");
  }
  const Trajectory pred = predict(model, test.noisy.times);
  ExtrapolationReport report;
  report.noise_sigma = test.noise_sigma;
  report.seed = test.seed;
  for (int j = 0; j < 3; ++j) {
    report.mse_noisy[j] =
        (pred.states.col(j) - test.noisy.states.col(j)).squaredNorm() /
        static_cast<double>(n);
    report.mse_clean[j] =
        (pred.states.col(j) - test.clean.states.col(j)).squaredNorm() /
        static_cast<double>(n);
  }
  return report;
}

DerivativeAgreement make_derivative_agreement(Eigen::VectorXd times,
                                              StateMatrix calculated,
                                              StateMatrix predicted) {
  if (times.size() < 2) {
    throw std::invalid_argument(
        "derivative_agreement: need at least two grid points");
  }
  if (calculated.rows() != times.size() || predicted.rows() != times.size()) {
    throw std::invalid_argument("derivative_agreement: column length mismatch");
  }
  DerivativeAgreement out;
  out.times = std::move(times);
  out.calculated = std::move(calculated);
  out.predicted = std::move(predicted);
  for (int j = 0; j < 3; ++j) {
    const Eigen::ArrayXd x = out.calculated.col(j).array();
    const Eigen::ArrayXd y = out.predicted.col(j).array();
    const double mx = x.mean();
    const double my = y.mean();
    const double sxx = ((x - mx) * (x - mx)).sum();
    const double syy = ((y - my) * (y - my)).sum();
    const double sxy = ((x - mx) * (y - my)).sum();
    out.slope[j] = sxx > 0.0 ? sxy / sxx : 0.0;
    out.pearson_r[j] =
        (sxx > 0.0 && syy > 0.0) ? sxy / std::sqrt(sxx * syy) : 0.0;
  }
  return out;
}

DerivativeAgreement derivative_agreement(
    const std::function<StateVector(double)>& calculated_fn,
    const std::function<StateVector(double)>& predicted_fn,
    const Eigen::VectorXd& t_grid) {
  if (t_grid.size() < 2) {
    throw std::invalid_argument(
        "derivative_agreement: need at least two grid points");
  }
  StateMatrix calculated(t_grid.size(), 3);
  StateMatrix predicted(t_grid.size(), 3);
  for (Eigen::Index i = 0; i < t_grid.size(); ++i) {
    calculated.row(i) = calculated_fn(t_grid[i]).transpose();
    predicted.row(i) = predicted_fn(t_grid[i]).transpose();
  }
  return make_derivative_agreement(t_grid, std::move(calculated),
                                   std::move(predicted));
}

DerivativeAgreement derivative_agreement(const PKINNModel& model,
                                         const Eigen::VectorXd& t_grid) {
  return derivative_agreement(
      [&](double t) {
        return StateVector(input_derivative(model.x_net, t));
      },
      [&](double t) {
        const StateVector x =
            forward(model.x_net, Eigen::VectorXd::Constant(1, t));
        return f_predict(model, t, x);
      },
      t_grid);
}

StateMatrix finite_difference_derivatives(const Trajectory& traj) {
  const Eigen::Index n = traj.size();
  if (n < 2) {
    throw std::invalid_argument(
        "finite_difference_derivatives: need at least two points");
  }
  StateMatrix out(n, 3);
  out.row(0) = (traj.states.row(1) - traj.states.row(0)) /
               (traj.times[1] - traj.times[0]);
  for (Eigen::Index i = 1; i + 1 < n; ++i) {
    out.row(i) = (traj.states.row(i + 1) - traj.states.row(i - 1)) /
                 (traj.times[i + 1] - traj.times[i - 1]);
  }
  out.row(n - 1) = (traj.states.row(n - 1) - traj.states.row(n - 2)) /
                   (traj.times[n - 1] - traj.times[n - 2]);
  return out;
}

namespace {

// Hessian entries by exact second differences; polynomial trees of degree
// <= 2 give machine zeros on linear input.
bool is_linear(const Expression& expr) {
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double h = 1e-2;
  for (int trial = 0; trial < 5; ++trial) {
    const StateVector x(u(rng), u(rng), u(rng));
    for (int j = 0; j < 3; ++j) {
      for (int k = j; k < 3; ++k) {
        double second;
        if (j == k) {
          StateVector xp = x, xm = x;
          xp[j] += h;
          xm[j] -= h;
          second =
              (expr.eval(xp) - 2.0 * expr.eval(x) + expr.eval(xm)) / (h * h);
        } else {
          StateVector xpp = x, xpm = x, xmp = x, xmm = x;
          xpp[j] += h;
          xpp[k] += h;
          xpm[j] += h;
          xpm[k] -= h;
          xmp[j] -= h;
          xmp[k] += h;
          xmm[j] -= h;
          xmm[k] -= h;
          second = (expr.eval(xpp) - expr.eval(xpm) - expr.eval(xmp) +
                    expr.eval(xmm)) /
                   (4.0 * h * h);
        }
        if (std::abs(second) > 1e-8) return false;
      }
    }
  }
  return true;
}

}  // namespace

ExpressionComparison compare_expressions(
    const std::array<Expression, 3>& recovered, const PKParameters& truth) {
  // Linear coefficients of the reference right-hand side.
  const double k_el = (truth.cl + truth.q) / truth.v1;
  const double k_out = truth.q / truth.v1;
  const double k_in = truth.q / truth.v2;
  const double true_coeffs[3][3] = {
      {-truth.ka, 0.0, 0.0},
      {truth.ka, -k_el, k_in},
      {0.0, k_out, -k_in},
  };

  ExpressionComparison cmp;
  for (int c = 0; c < 3; ++c) {
    ComponentComparison& comp = cmp.components[c];
    comp.linear = is_linear(recovered[c]);
    if (!comp.linear) ++cmp.nonlinear_count;

    const PolynomialForm form = expand(recovered[c]);
    std::array<double, 3> linear{};
    for (const auto& [mono, coeff] : form) {
      if (std::abs(coeff) < 1e-8) continue;
      if (mono.degree() == 0) {
        comp.constant_term = coeff;
        continue;
      }
      if (mono.e0 > 0) comp.support[0] = true;
      if (mono.e1 > 0) comp.support[1] = true;
      if (mono.e2 > 0) comp.support[2] = true;
      if (mono.degree() == 1) {
        linear[mono.e0 ? 0 : mono.e1 ? 1 : 2] = coeff;
      }
    }
    comp.support_match = true;
    for (int v = 0; v < 3; ++v) {
      comp.true_support[v] = true_coeffs[c][v] != 0.0;
      comp.coefficient_delta[v] = linear[v] - true_coeffs[c][v];
      if (comp.support[v] != comp.true_support[v]) comp.support_match = false;
    }
  }
  return cmp;
}

namespace {

class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path)
      : path_(path.string()), out_(path) {
    if (!out_) throw IoError("cannot open for writing: " + path_);
  }
  void line(const std::string& text) { out_ << text << "\n"; }
  void number(double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    out_ << buf;
  }
  void raw(const std::string& text) { out_ << text; }
  void finish() {
    if (!out_) throw IoError("write failed: " + path_);
  }

 private:
  std::string path_;
  std::ofstream out_;
};

}  // namespace

std::vector<std::string> export_run(const RunArtifacts& artifacts,
                                    const std::string& directory) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw IoError("cannot create directory: " + directory);
  std::vector<std::string> files;

  if (artifacts.dataset && artifacts.predictions) {
    const NoisyDataset& ds = *artifacts.dataset;
    const Trajectory& pred = *artifacts.predictions;
    if (pred.size() != ds.clean.size()) {
      throw std::invalid_argument("export_run: prediction grid mismatch");
    }
    CsvWriter csv(fs::path(directory) / "curves.csv");
    csv.line(
        "t,x0_clean,x1_clean,x2_clean,x0_noisy,x1_noisy,x2_noisy,"
        "x0_pred,x1_pred,x2_pred,split");
    for (Eigen::Index i = 0; i < ds.clean.size(); ++i) {
      csv.number(ds.clean.times[i]);
      for (int j = 0; j < 3; ++j) {
        csv.raw(",");
        csv.number(ds.clean.states(i, j));
      }
      for (int j = 0; j < 3; ++j) {
        csv.raw(",");
        csv.number(ds.noisy.states(i, j));
      }
      for (int j = 0; j < 3; ++j) {
        csv.raw(",");
        csv.number(pred.states(i, j));
      }
      csv.raw(ds.clean.times[i] < artifacts.t_split ? ",train\n" : ",test\n");
    }
    csv.finish();
    files.push_back("curves.csv");
  }

  if (artifacts.derivatives) {
    const DerivativeAgreement& da = *artifacts.derivatives;
    for (int j = 0; j < 3; ++j) {
      const std::string name = "derivative_x" + std::to_string(j) + ".csv";
      CsvWriter csv(fs::path(directory) / name);
      csv.line("t,calculated,predicted");
      for (Eigen::Index i = 0; i < da.times.size(); ++i) {
        csv.number(da.times[i]);
        csv.raw(",");
        csv.number(da.calculated(i, j));
        csv.raw(",");
        csv.number(da.predicted(i, j));
        csv.raw("\n");
      }
      csv.finish();
      files.push_back(name);
    }
  }

  if (artifacts.extrapolation) {
    const ExtrapolationReport& er = *artifacts.extrapolation;
    CsvWriter csv(fs::path(directory) / "extrapolation.csv");
    csv.line("component,mse_vs_noisy,mse_vs_clean,noise_sigma,seed");
    for (int j = 0; j < 3; ++j) {
      csv.raw("x" + std::to_string(j) + ",");
      csv.number(er.mse_noisy[j]);
      csv.raw(",");
      csv.number(er.mse_clean[j]);
      csv.raw(",");
      csv.number(er.noise_sigma);
      csv.raw("," + std::to_string(er.seed) + "\n");
    }
    csv.finish();
    files.push_back("extrapolation.csv");
  }

  if (artifacts.discovery_text) {
    const fs::path path = fs::path(directory) / "discovery.txt";
    std::ofstream out(path);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out << *artifacts.discovery_text;
    if (!out) throw IoError("write failed: " + path.string());
    files.push_back("discovery.txt");
  }

  CsvWriter manifest(fs::path(directory) / "manifest.txt");
  for (const std::string& name : files) {
    const auto size = fs::file_size(fs::path(directory) / name, ec);
    manifest.raw(name + " " + std::to_string(ec ? 0 : size) + "\n");
  }
  manifest.finish();
  files.push_back("manifest.txt");
  return files;
}

}  // namespace pkinn
