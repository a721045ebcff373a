#ifndef PKINN_NETWORK_HPP
#define PKINN_NETWORK_HPP

#include <Eigen/Core>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pkinn/autodiff.hpp"

namespace pkinn {

enum class Activation : std::uint8_t { kTanh, kLinear };

struct NetworkSpec {
  int input_dim = 1;
  int output_dim = 1;
  std::vector<int> hidden_layers;
  std::vector<Activation> activations;  // one per layer, final must be linear

  // Hidden layers tanh, output layer linear.
  static NetworkSpec dense(int input_dim, std::vector<int> hidden,
                           int output_dim);

  int num_layers() const { return static_cast<int>(hidden_layers.size()) + 1; }
  int layer_in(int layer) const;
  int layer_out(int layer) const;
  Activation activation(int layer) const { return activations[layer]; }
  int num_parameters() const;
};

void validate(const NetworkSpec& spec);

struct DenseNetwork {
  NetworkSpec spec;
  std::vector<Eigen::MatrixXd> weights;  // weights[l] is layer_out x layer_in
  std::vector<Eigen::VectorXd> biases;
};

// Glorot-uniform weights (U(-sqrt(6/(fan_in+fan_out)), +...)), zero biases.
// Weight entries are drawn row-major per layer, so the result is a pure
// function of (spec, seed).
DenseNetwork init_network(const NetworkSpec& spec, std::uint64_t seed);

// Affine-then-activation composition. Throws ShapeError on a bad input size.
Eigen::VectorXd forward(const DenseNetwork& net, const Eigen::VectorXd& input);

// Exact derivative of every output w.r.t. the scalar input, computed by a
// forward tangent pass (not finite differences). Requires input_dim == 1.
Eigen::VectorXd input_derivative(const DenseNetwork& net, double t);

// Batched variants: inputs are columns, outputs are columns.
Eigen::MatrixXd forward_batch(const DenseNetwork& net,
                              const Eigen::MatrixXd& inputs);

// Checkpoint text format: spec line, then per-layer flattened weights
// (row-major) and biases at full precision. Round-trips bit-exactly.
void write_network(std::ostream& out, const DenseNetwork& net);
DenseNetwork read_network(std::istream& in, const std::string& context);

// ---- tape bridge -------------------------------------------------------

// Parameter leaves for one network on a tape; order is W0,b0,W1,b1,...
struct NetworkVars {
  const NetworkSpec* spec = nullptr;
  std::vector<ad::Var> weights;
  std::vector<ad::Var> biases;
};

NetworkVars register_network(ad::Tape& tape, const DenseNetwork& net);

// Forward pass on the tape; `input` is (input_dim x n).
ad::Var net_forward(ad::Tape& tape, const NetworkVars& vars, ad::Var input);

// Forward plus the tangent d(output)/d(input scalar); input must be 1 x n.
// The tangent chain is built from tape primitives, so backward() yields
// exact parameter gradients of any objective containing it.
std::pair<ad::Var, ad::Var> net_forward_tangent(ad::Tape& tape,
                                                const NetworkVars& vars,
                                                ad::Var input);

}  // namespace pkinn

#endif  // PKINN_NETWORK_HPP
