#ifndef PKINN_ADAM_HPP
#define PKINN_ADAM_HPP

#include <Eigen/Core>
#include <cstdint>

namespace pkinn {

struct AdamState {
  double learning_rate = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::int64_t step_count = 0;
  Eigen::VectorXd first_moment;   // sized on first step
  Eigen::VectorXd second_moment;

  explicit AdamState(double lr = 1e-2) : learning_rate(lr) {}
};

// One bias-corrected Adam update in place:
//   m <- b1*m + (1-b1)*g,  v <- b2*v + (1-b2)*g^2
//   p <- p - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
// Throws ShapeError if grads (or an initialized state) mismatch params.
void adam_step(AdamState& state, Eigen::VectorXd& params,
               const Eigen::VectorXd& grads);

}  // namespace pkinn

#endif  // PKINN_ADAM_HPP
