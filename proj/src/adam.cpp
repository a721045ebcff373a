#include "pkinn/adam.hpp"

#include <cmath>

#include "pkinn/errors.hpp"

namespace pkinn {

void adam_step(AdamState& state, Eigen::VectorXd& params,
               const Eigen::VectorXd& grads) {
  if (params.size() != grads.size()) {
    throw ShapeError("adam_step: params/grads size mismatch");
  }
  if (state.first_moment.size() == 0) {
    state.first_moment = Eigen::VectorXd::Zero(params.size());
    state.second_moment = Eigen::VectorXd::Zero(params.size());
  } else if (state.first_moment.size() != params.size()) {
    throw ShapeError("adam_step: state sized for a different parameter set");
  }

  state.step_count += 1;
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  state.first_moment = b1 * state.first_moment + (1.0 - b1) * grads;
  state.second_moment =
      b2 * state.second_moment.array() + (1.0 - b2) * grads.array().square();

  const double corr1 =
      1.0 - std::pow(b1, static_cast<double>(state.step_count));
  const double corr2 =
      1.0 - std::pow(b2, static_cast<double>(state.step_count));
  params.array() -=
      state.learning_rate * (state.first_moment.array() / corr1) /
      ((state.second_moment.array() / corr2).sqrt() + state.epsilon);
}

}  // namespace pkinn
