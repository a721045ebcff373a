#include "pkinn/pkinn_model.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pkinn/adam.hpp"
#include "pkinn/errors.hpp"

namespace pkinn {

std::string to_string(PkinnMode mode) {
  return mode == PkinnMode::kBlackbox ? "blackbox" : "parametric";
}

PkinnMode mode_from_string(const std::string& name) {
  if (name == "blackbox") return PkinnMode::kBlackbox;
  if (name == "parametric") return PkinnMode::kParametric;
  throw std::invalid_argument("unknown mode: " + name);
}

PKINNModel make_model(PkinnMode mode, std::uint64_t seed,
                      std::vector<int> x_hidden, std::vector<int> f_hidden) {
  PKINNModel model;
  model.mode = mode;
  model.x_net =
      init_network(NetworkSpec::dense(1, std::move(x_hidden), 3), seed);
  model.f_net =
      init_network(NetworkSpec::dense(4, std::move(f_hidden), 3), seed + 1);
  return model;
}

StateVector f_predict(const PKINNModel& model, double t,
                      const StateVector& x) {
  if (model.mode == PkinnMode::kParametric) {
    const auto& p = model.learnable;
    return detail::compartment_rhs(p[0], p[1], p[2], p[3], p[4], x);
  }
  Eigen::VectorXd in(4);
  in << t, x[0], x[1], x[2];
  return forward(model.f_net, in);
}

StateMatrix ode_residuals(
    const std::function<StateVector(double)>& state_fn,
    const std::function<StateVector(double)>& deriv_fn,
    const std::function<StateVector(double, const StateVector&)>& f_fn,
    const Eigen::VectorXd& t_colloc) {
  if (t_colloc.size() == 0) {
    throw std::invalid_argument("ode_residuals: empty collocation set");
  }
  StateMatrix res(t_colloc.size(), 3);
  for (Eigen::Index n = 0; n < t_colloc.size(); ++n) {
    const double t = t_colloc[n];
    const StateVector x = state_fn(t);
    res.row(n) = (deriv_fn(t) - f_fn(t, x)).transpose();
  }
  return res;
}

StateMatrix ode_residuals(const PKINNModel& model,
                          const Eigen::VectorXd& t_colloc) {
  return ode_residuals(
      [&](double t) { return StateVector(forward(
          model.x_net, Eigen::VectorXd::Constant(1, t))); },
      [&](double t) { return StateVector(input_derivative(model.x_net, t)); },
      [&](double t, const StateVector& x) { return f_predict(model, t, x); },
      t_colloc);
}

double loss_ode(const StateMatrix& residuals) {
  if (residuals.rows() == 0) {
    throw std::invalid_argument("loss_ode: empty residual matrix");
  }
  return residuals.squaredNorm() / static_cast<double>(residuals.rows());
}

double loss_ic(const PKINNModel& model, const StateVector& x_init,
               double t0) {
  const Eigen::VectorXd pred =
      forward(model.x_net, Eigen::VectorXd::Constant(1, t0));
  return (x_init - StateVector(pred)).norm();
}

double loss_data(const PKINNModel& model, const NoisyDataset& train) {
  const Eigen::Index n = train.noisy.size();
  if (n == 0) throw std::invalid_argument("loss_data: empty training set");
  const Eigen::MatrixXd pred =
      forward_batch(model.x_net, train.noisy.times.transpose());
  const Eigen::MatrixXd err = pred - train.noisy.states.transpose();
  return err.squaredNorm() / static_cast<double>(3 * n);
}

namespace {

Eigen::VectorXd resolve_collocation(const NoisyDataset& train,
                                    const TrainConfig& config) {
  const Eigen::VectorXd& t = train.noisy.times;
  if (t.size() == 0) throw std::invalid_argument("train: empty dataset");
  if (config.collocation_times.size() == 0) return t;
  const Eigen::VectorXd& c = config.collocation_times;
  if (c.minCoeff() < t[0] || c.maxCoeff() > t[t.size() - 1]) {
    throw std::invalid_argument(
        "collocation times outside the training time range");
  }
  return c;
}

// Parameter leaves and loss nodes for one objective evaluation.
struct TapeObjective {
  NetworkVars x_vars;
  NetworkVars f_vars;
  std::array<ad::Var, 5> params;
  ad::Var data, ode, ic, total;
};

TapeObjective build_objective(ad::Tape& tape, const PKINNModel& model,
                              const NoisyDataset& train,
                              const Eigen::VectorXd& colloc,
                              const TrainConfig& config) {
  TapeObjective obj;
  obj.x_vars = register_network(tape, model.x_net);
  const bool blackbox = model.mode == PkinnMode::kBlackbox;
  if (blackbox) obj.f_vars = register_network(tape, model.f_net);
  for (int i = 0; i < 5; ++i) {
    obj.params[i] = tape.scalar(model.learnable[i], true);
  }

  const Eigen::Index n_data = train.noisy.size();
  const Eigen::Index n_ode = colloc.size();

  // ODE residual term on the collocation grid.
  ad::Var t_colloc = tape.leaf(colloc.transpose());
  auto [x_colloc, dx_colloc] = net_forward_tangent(tape, obj.x_vars, t_colloc);
  ad::Var f;
  if (blackbox) {
    f = net_forward(tape, obj.f_vars, tape.vcat(t_colloc, x_colloc));
  } else {
    // Structural compartment form with the learnable constants.
    ad::Var ka = obj.params[0], cl = obj.params[1], q = obj.params[2],
            v1 = obj.params[3], v2 = obj.params[4];
    ad::Var x0 = tape.row(x_colloc, 0);
    ad::Var x1 = tape.row(x_colloc, 1);
    ad::Var x2 = tape.row(x_colloc, 2);
    ad::Var ka_x0 = tape.scalar_mul(ka, x0);
    ad::Var k_el = tape.scalar_div(tape.add(cl, q), v1);  // (cl+q)/v1
    ad::Var k_in = tape.scalar_div(q, v2);                // q/v2
    ad::Var k_out = tape.scalar_div(q, v1);               // q/v1
    ad::Var f1 = tape.affine(ka_x0, -1.0, 0.0);
    ad::Var f2 = tape.add(tape.sub(ka_x0, tape.scalar_mul(k_el, x1)),
                          tape.scalar_mul(k_in, x2));
    ad::Var f3 = tape.sub(tape.scalar_mul(k_out, x1),
                          tape.scalar_mul(k_in, x2));
    f = tape.vcat(tape.vcat(f1, f2), f3);
  }
  ad::Var residuals = tape.sub(dx_colloc, f);
  obj.ode = tape.affine(tape.sum_squares(residuals),
                        1.0 / static_cast<double>(n_ode), 0.0);

  // Data misfit; reuse the collocation forward when the grids coincide.
  const bool same_grid = colloc.size() == train.noisy.times.size() &&
                         colloc.cwiseEqual(train.noisy.times).all();
  ad::Var x_data = same_grid
                       ? x_colloc
                       : net_forward(tape, obj.x_vars,
                                     tape.leaf(train.noisy.times.transpose()));
  ad::Var misfit = tape.sub(x_data, tape.leaf(train.noisy.states.transpose()));
  obj.data = tape.affine(tape.sum_squares(misfit),
                         1.0 / static_cast<double>(3 * n_data), 0.0);

  // Initial-condition misfit at the first training time.
  ad::Var x_at_t0 = net_forward(
      tape, obj.x_vars,
      tape.leaf(Eigen::MatrixXd::Constant(1, 1, train.noisy.times[0])));
  ad::Var ic_err =
      tape.sub(x_at_t0, tape.leaf(Eigen::MatrixXd(config.initial_condition)));
  obj.ic = tape.sqrt(tape.sum_squares(ic_err));

  const LossWeights& w = model.loss_weights;
  obj.total = tape.add(tape.add(tape.affine(obj.data, w.data, 0.0),
                                tape.affine(obj.ode, w.ode, 0.0)),
                       tape.affine(obj.ic, w.ic, 0.0));
  return obj;
}

LossBreakdown breakdown_of(const TapeObjective& obj) {
  LossBreakdown b;
  b.total = obj.total.value()(0, 0);
  b.data = obj.data.value()(0, 0);
  b.ode = obj.ode.value()(0, 0);
  b.ic = obj.ic.value()(0, 0);
  return b;
}

void append_network(const DenseNetwork& net, Eigen::VectorXd& flat,
                    Eigen::Index& at) {
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    const auto& w = net.weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) flat[at++] = w(r, c);
    }
    for (Eigen::Index r = 0; r < net.biases[l].size(); ++r) {
      flat[at++] = net.biases[l][r];
    }
  }
}

void extract_network(const Eigen::VectorXd& flat, DenseNetwork& net,
                     Eigen::Index& at) {
  for (std::size_t l = 0; l < net.weights.size(); ++l) {
    auto& w = net.weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = flat[at++];
    }
    for (Eigen::Index r = 0; r < net.biases[l].size(); ++r) {
      net.biases[l][r] = flat[at++];
    }
  }
}

// Gradient read-out in the same order as pack_parameters.
void collect_gradients(const ad::Tape& tape, const TapeObjective& obj,
                       const PKINNModel& model, Eigen::VectorXd& grads) {
  Eigen::Index at = 0;
  auto append_vars = [&](const NetworkVars& vars, const DenseNetwork& net,
                         bool registered) {
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
      const Eigen::Index wn = net.weights[l].size();
      const Eigen::Index bn = net.biases[l].size();
      if (!registered) {
        grads.segment(at, wn + bn).setZero();
        at += wn + bn;
        continue;
      }
      const Eigen::MatrixXd& wg = tape.grad(vars.weights[l]);
      for (Eigen::Index r = 0; r < wg.rows(); ++r) {
        for (Eigen::Index c = 0; c < wg.cols(); ++c) grads[at++] = wg(r, c);
      }
      const Eigen::MatrixXd& bg = tape.grad(vars.biases[l]);
      for (Eigen::Index r = 0; r < bg.rows(); ++r) grads[at++] = bg(r, 0);
    }
  };
  append_vars(obj.x_vars, model.x_net, true);
  append_vars(obj.f_vars, model.f_net,
              model.mode == PkinnMode::kBlackbox);
  for (int i = 0; i < 5; ++i) grads[at++] = tape.grad(obj.params[i])(0, 0);
}

}  // namespace

LossBreakdown loss_total(const PKINNModel& model, const NoisyDataset& train,
                         const TrainConfig& config) {
  const Eigen::VectorXd colloc = resolve_collocation(train, config);
  LossBreakdown b;
  b.data = loss_data(model, train);
  b.ode = loss_ode(ode_residuals(model, colloc));
  b.ic = loss_ic(model, config.initial_condition, train.noisy.times[0]);
  const LossWeights& w = model.loss_weights;
  b.total = w.data * b.data + w.ode * b.ode + w.ic * b.ic;
  return b;
}

std::pair<LossBreakdown, Eigen::VectorXd> loss_and_gradients(
    const PKINNModel& model, const NoisyDataset& train,
    const TrainConfig& config) {
  const Eigen::VectorXd colloc = resolve_collocation(train, config);
  ad::Tape tape;
  TapeObjective obj = build_objective(tape, model, train, colloc, config);
  tape.backward(obj.total);
  Eigen::VectorXd grads(pack_parameters(model).size());
  collect_gradients(tape, obj, model, grads);
  return {breakdown_of(obj), grads};
}

Eigen::VectorXd pack_parameters(const PKINNModel& model) {
  const Eigen::Index n = model.x_net.spec.num_parameters() +
                         model.f_net.spec.num_parameters() + 5;
  Eigen::VectorXd flat(n);
  Eigen::Index at = 0;
  append_network(model.x_net, flat, at);
  append_network(model.f_net, flat, at);
  for (int i = 0; i < 5; ++i) flat[at++] = model.learnable[i];
  return flat;
}

void unpack_parameters(const Eigen::VectorXd& flat, PKINNModel& model) {
  const Eigen::Index n = model.x_net.spec.num_parameters() +
                         model.f_net.spec.num_parameters() + 5;
  if (flat.size() != n) {
    throw ShapeError("unpack_parameters: flat vector size mismatch");
  }
  Eigen::Index at = 0;
  extract_network(flat, model.x_net, at);
  extract_network(flat, model.f_net, at);
  for (int i = 0; i < 5; ++i) model.learnable[i] = flat[at++];
}

std::pair<PKINNModel, TrainReport> train(const PKINNModel& model,
                                         const NoisyDataset& data,
                                         const TrainConfig& config) {
  if (config.epochs < 1) throw std::invalid_argument("train: epochs < 1");
  const LossWeights& w = model.loss_weights;
  if (!(w.data > 0.0 && w.ode > 0.0 && w.ic > 0.0)) {
    throw std::invalid_argument("train: loss weights must be positive");
  }
  const Eigen::VectorXd colloc = resolve_collocation(data, config);

  PKINNModel current = model;
  Eigen::VectorXd params = pack_parameters(current);
  Eigen::VectorXd grads(params.size());
  AdamState adam(config.learning_rate);

  TrainReport report;
  report.loss_trace.resize(config.epochs, 4);
  report.param_trace.resize(config.epochs, 5);

  const auto t_start = std::chrono::steady_clock::now();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    ad::Tape tape;
    TapeObjective obj = build_objective(tape, current, data, colloc, config);
    const LossBreakdown b = breakdown_of(obj);
    if (!std::isfinite(b.total)) throw DivergedError(epoch);
    report.loss_trace.row(epoch) << b.total, b.data, b.ode, b.ic;

    tape.backward(obj.total);
    collect_gradients(tape, obj, current, grads);
    adam_step(adam, params, grads);
    unpack_parameters(params, current);
    for (int i = 0; i < 5; ++i) {
      report.param_trace(epoch, i) = current.learnable[i];
    }
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  report.final_params = current.learnable;
  return {std::move(current), std::move(report)};
}

Trajectory predict(const PKINNModel& model, const Eigen::VectorXd& t_grid) {
  Trajectory traj;
  traj.times = t_grid;
  traj.states = forward_batch(model.x_net, t_grid.transpose()).transpose();
  return traj;
}

void write_model(const PKINNModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  char buf[64];
  auto emit = [&](double x) {
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    out << buf;
  };
  out << "pkinn " << to_string(model.mode) << "\n";
  out << "loss_weights";
  for (double w : {model.loss_weights.data, model.loss_weights.ode,
                   model.loss_weights.ic}) {
    out << " ";
    emit(w);
  }
  out << "\nlearnable";
  for (double p : model.learnable) {
    out << " ";
    emit(p);
  }
  out << "\n";
  write_network(out, model.x_net);
  write_network(out, model.f_net);
  if (!out) throw IoError("write failed: " + path);
}

PKINNModel read_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  PKINNModel model;
  std::string line, tag, mode_name;
  if (!std::getline(in, line)) throw ParseError(path, 1, "empty checkpoint");
  std::istringstream head(line);
  head >> tag >> mode_name;
  if (tag != "pkinn") throw ParseError(path, 1, "bad checkpoint header");
  model.mode = mode_from_string(mode_name);

  if (!std::getline(in, line)) throw ParseError(path, 2, "missing weights");
  std::istringstream wline(line);
  wline >> tag >> model.loss_weights.data >> model.loss_weights.ode >>
      model.loss_weights.ic;
  if (tag != "loss_weights" || !wline) {
    throw ParseError(path, 2, "bad loss_weights line");
  }

  if (!std::getline(in, line)) throw ParseError(path, 3, "missing learnable");
  std::istringstream pline(line);
  pline >> tag;
  if (tag != "learnable") throw ParseError(path, 3, "bad learnable line");
  for (double& p : model.learnable) {
    if (!(pline >> p)) throw ParseError(path, 3, "short learnable line");
  }

  model.x_net = read_network(in, path);
  model.f_net = read_network(in, path);
  return model;
}

void write_train_report_csv(const TrainReport& report,
                            const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "epoch,loss_total,loss_data,loss_ode,loss_ic,ka,cl,q,v1,v2\n";
  char buf[64];
  auto emit = [&](double x) {
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    out << buf;
  };
  for (Eigen::Index e = 0; e < report.loss_trace.rows(); ++e) {
    out << (e + 1);
    for (int j = 0; j < 4; ++j) {
      out << ",";
      emit(report.loss_trace(e, j));
    }
    for (int j = 0; j < 5; ++j) {
      out << ",";
      emit(report.param_trace(e, j));
    }
    out << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace pkinn
