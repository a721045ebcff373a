#include "pkinn/network.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "pkinn/errors.hpp"

namespace pkinn {

NetworkSpec NetworkSpec::dense(int input_dim, std::vector<int> hidden,
                               int output_dim) {
  NetworkSpec spec;
  spec.input_dim = input_dim;
  spec.output_dim = output_dim;
  spec.hidden_layers = std::move(hidden);
  spec.activations.assign(spec.hidden_layers.size(), Activation::kTanh);
  spec.activations.push_back(Activation::kLinear);
  validate(spec);
  return spec;
}

int NetworkSpec::layer_in(int layer) const {
  return layer == 0 ? input_dim : hidden_layers[layer - 1];
}

int NetworkSpec::layer_out(int layer) const {
  return layer + 1 == num_layers() ? output_dim : hidden_layers[layer];
}

int NetworkSpec::num_parameters() const {
  int n = 0;
  for (int l = 0; l < num_layers(); ++l) {
    n += layer_out(l) * layer_in(l) + layer_out(l);
  }
  return n;
}

void validate(const NetworkSpec& spec) {
  if (spec.input_dim < 1 || spec.output_dim < 1) {
    throw std::invalid_argument("NetworkSpec: dims must be positive");
  }
  for (int w : spec.hidden_layers) {
    if (w < 1) throw std::invalid_argument("NetworkSpec: zero-width layer");
  }
  if (spec.activations.size() != static_cast<std::size_t>(spec.num_layers())) {
    throw std::invalid_argument("NetworkSpec: one activation per layer");
  }
  if (spec.activations.back() != Activation::kLinear) {
    throw std::invalid_argument("NetworkSpec: final layer must be linear");
  }
}

DenseNetwork init_network(const NetworkSpec& spec, std::uint64_t seed) {
  validate(spec);
  DenseNetwork net;
  net.spec = spec;
  std::mt19937_64 rng(seed);
  for (int l = 0; l < spec.num_layers(); ++l) {
    const int fan_in = spec.layer_in(l);
    const int fan_out = spec.layer_out(l);
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> uniform(-limit, limit);
    Eigen::MatrixXd w(fan_out, fan_in);
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = uniform(rng);
    }
    net.weights.push_back(std::move(w));
    net.biases.push_back(Eigen::VectorXd::Zero(fan_out));
  }
  return net;
}

namespace {

void check_consistent(const DenseNetwork& net) {
  const auto layers = static_cast<std::size_t>(net.spec.num_layers());
  if (net.weights.size() != layers || net.biases.size() != layers) {
    throw ShapeError("DenseNetwork: layer count inconsistent with spec");
  }
}

}  // namespace

Eigen::MatrixXd forward_batch(const DenseNetwork& net,
                              const Eigen::MatrixXd& inputs) {
  check_consistent(net);
  if (inputs.rows() != net.spec.input_dim) {
    throw ShapeError("forward: input dimension mismatch");
  }
  Eigen::MatrixXd a = inputs;
  for (int l = 0; l < net.spec.num_layers(); ++l) {
    Eigen::MatrixXd z = (net.weights[l] * a).colwise() + net.biases[l];
    if (net.spec.activation(l) == Activation::kTanh) {
      a = z.array().tanh().matrix();
    } else {
      a = std::move(z);
    }
  }
  return a;
}

Eigen::VectorXd forward(const DenseNetwork& net,
                        const Eigen::VectorXd& input) {
  return forward_batch(net, input);
}

Eigen::VectorXd input_derivative(const DenseNetwork& net, double t) {
  check_consistent(net);
  if (net.spec.input_dim != 1) {
    throw ShapeError("input_derivative: only scalar-input networks");
  }
  Eigen::VectorXd a = Eigen::VectorXd::Constant(1, t);
  Eigen::VectorXd u = Eigen::VectorXd::Ones(1);  // da/dt
  for (int l = 0; l < net.spec.num_layers(); ++l) {
    Eigen::VectorXd z = net.weights[l] * a + net.biases[l];
    Eigen::VectorXd du = net.weights[l] * u;
    if (net.spec.activation(l) == Activation::kTanh) {
      a = z.array().tanh().matrix();
      u = (1.0 - a.array().square()).matrix().cwiseProduct(du);
    } else {
      a = std::move(z);
      u = std::move(du);
    }
  }
  return u;
}

void write_network(std::ostream& out, const DenseNetwork& net) {
  check_consistent(net);
  out << "network " << net.spec.input_dim << " " << net.spec.output_dim
      << " hidden";
  for (int w : net.spec.hidden_layers) out << " " << w;
  out << " act";
  for (Activation a : net.spec.activations) {
    out << " " << (a == Activation::kTanh ? "tanh" : "linear");
  }
  out << "\n";
  char buf[64];
  auto emit = [&](double x) {
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    out << buf;
  };
  for (int l = 0; l < net.spec.num_layers(); ++l) {
    out << "layer " << l << " " << net.spec.layer_out(l) << " "
        << net.spec.layer_in(l) << "\n";
    const auto& w = net.weights[l];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) {
        if (c > 0) out << " ";
        emit(w(r, c));
      }
      out << "\n";
    }
    const auto& b = net.biases[l];
    for (Eigen::Index r = 0; r < b.size(); ++r) {
      if (r > 0) out << " ";
      emit(b[r]);
    }
    out << "\n";
  }
}

namespace {

std::string next_line(std::istream& in, const std::string& context) {
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError(context, 0, "unexpected end of checkpoint");
  }
  return line;
}

}  // namespace

DenseNetwork read_network(std::istream& in, const std::string& context) {
  std::string line = next_line(in, context);
  std::istringstream head(line);
  std::string tag, hidden_tag, token;
  NetworkSpec spec;
  head >> tag >> spec.input_dim >> spec.output_dim >> hidden_tag;
  if (tag != "network" || hidden_tag != "hidden") {
    throw ParseError(context, 0, "bad network header: " + line);
  }
  while (head >> token && token != "act") {
    try {
      spec.hidden_layers.push_back(std::stoi(token));
    } catch (const std::exception&) {
      throw ParseError(context, 0, "bad layer width '" + token + "'");
    }
  }
  while (head >> token) {
    if (token == "tanh") {
      spec.activations.push_back(Activation::kTanh);
    } else if (token == "linear") {
      spec.activations.push_back(Activation::kLinear);
    } else {
      throw ParseError(context, 0, "unknown activation '" + token + "'");
    }
  }
  validate(spec);

  DenseNetwork net;
  net.spec = spec;
  for (int l = 0; l < spec.num_layers(); ++l) {
    std::istringstream lh(next_line(in, context));
    std::string ltag;
    int index, rows, cols;
    lh >> ltag >> index >> rows >> cols;
    if (ltag != "layer" || index != l || rows != spec.layer_out(l) ||
        cols != spec.layer_in(l)) {
      throw ParseError(context, 0, "bad layer header in checkpoint");
    }
    Eigen::MatrixXd w(rows, cols);
    for (int r = 0; r < rows; ++r) {
      std::istringstream ls(next_line(in, context));
      for (int c = 0; c < cols; ++c) {
        if (!(ls >> w(r, c))) {
          throw ParseError(context, 0, "short weight row in checkpoint");
        }
      }
    }
    Eigen::VectorXd b(rows);
    std::istringstream bs(next_line(in, context));
    for (int r = 0; r < rows; ++r) {
      if (!(bs >> b[r])) {
        throw ParseError(context, 0, "short bias row in checkpoint");
      }
    }
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
  }
  return net;
}

NetworkVars register_network(ad::Tape& tape, const DenseNetwork& net) {
  check_consistent(net);
  NetworkVars vars;
  vars.spec = &net.spec;
  for (int l = 0; l < net.spec.num_layers(); ++l) {
    vars.weights.push_back(tape.leaf(net.weights[l], true));
    vars.biases.push_back(tape.leaf(net.biases[l], true));
  }
  return vars;
}

ad::Var net_forward(ad::Tape& tape, const NetworkVars& vars, ad::Var input) {
  const NetworkSpec& spec = *vars.spec;
  if (input.value().rows() != spec.input_dim) {
    throw ShapeError("net_forward: input dimension mismatch");
  }
  ad::Var a = input;
  for (int l = 0; l < spec.num_layers(); ++l) {
    ad::Var z = tape.add_col(tape.matmul(vars.weights[l], a), vars.biases[l]);
    a = spec.activation(l) == Activation::kTanh ? tape.tanh(z) : z;
  }
  return a;
}

std::pair<ad::Var, ad::Var> net_forward_tangent(ad::Tape& tape,
                                                const NetworkVars& vars,
                                                ad::Var input) {
  const NetworkSpec& spec = *vars.spec;
  if (spec.input_dim != 1 || input.value().rows() != 1) {
    throw ShapeError("net_forward_tangent: scalar-input networks only");
  }
  ad::Var a = input;
  ad::Var u = tape.leaf(Eigen::MatrixXd::Ones(1, input.value().cols()));
  for (int l = 0; l < spec.num_layers(); ++l) {
    ad::Var z = tape.add_col(tape.matmul(vars.weights[l], a), vars.biases[l]);
    ad::Var du = tape.matmul(vars.weights[l], u);
    if (spec.activation(l) == Activation::kTanh) {
      a = tape.tanh(z);
      // tanh'(z) = 1 - tanh(z)^2, expressed through tape primitives so the
      // second-order terms reach the parameter gradients.
      ad::Var sigma_prime = tape.affine(tape.cwise_mul(a, a), -1.0, 1.0);
      u = tape.cwise_mul(sigma_prime, du);
    } else {
      a = z;
      u = du;
    }
  }
  return {a, u};
}

}  // namespace pkinn
