// Copyright 2026 The pinslab Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <numbers>

#include "pinslab/environments.hpp"
#include "pinslab/error.hpp"

namespace pinslab {

CartpoleSwingupEnv::CartpoleSwingupEnv(std::uint64_t seed, CartpoleConstants constants)
    : constants_(constants), rng_(seed, streams::kEnvironment) {
  reset();
}

Eigen::VectorXd CartpoleSwingupEnv::reset() {
  const double noise = constants_.init_noise;
  state_.x = rng_.uniform(-noise, noise);
  state_.x_dot = rng_.uniform(-noise, noise);
  state_.theta = std::numbers::pi + rng_.uniform(-noise, noise);
  state_.theta_dot = rng_.uniform(-noise, noise);
  steps_ = 0;
  done_ = false;
  return observation();
}

void CartpoleSwingupEnv::set_state(const CartpoleState& s, int steps_taken) {
  state_ = s;
  steps_ = steps_taken;
  done_ = false;
}

Eigen::VectorXd CartpoleSwingupEnv::observation() const {
  Eigen::VectorXd obs(kObservationSize);
  obs << state_.x, state_.x_dot, std::sin(state_.theta), std::cos(state_.theta), state_.theta_dot,
      state_.theta_dot * state_.theta_dot,
      static_cast<double>(steps_) / static_cast<double>(constants_.max_steps), 1.0;
  return obs;
}

StepResult CartpoleSwingupEnv::step(int action) {
  if (done_) fail(ErrorCode::kEpisodeFinished, "cartpole episode already finished");
  if (action < 0 || action > 2) fail(ErrorCode::kInvalidArgument, "cartpole action must be 0, 1 or 2");

  const auto& c = constants_;
  const double force = static_cast<double>(action - 1) * c.force_magnitude;
  const double total_mass = c.cart_mass + c.pole_mass;
  const double pole_moment = c.pole_mass * c.pole_half_length;
  const double sin_t = std::sin(state_.theta);
  const double cos_t = std::cos(state_.theta);

  // Frictionless cart-pole with a uniform rod (inertia ml^2/3 about its centre).
  const double temp = (force + pole_moment * state_.theta_dot * state_.theta_dot * sin_t) / total_mass;
  const double theta_acc =
      (c.gravity * sin_t - cos_t * temp) /
      (c.pole_half_length * (4.0 / 3.0 - c.pole_mass * cos_t * cos_t / total_mass));
  const double x_acc = temp - pole_moment * theta_acc * cos_t / total_mass;

  // Semi-implicit Euler: velocities first, positions from the new velocities.
  state_.x_dot += c.dt * x_acc;
  state_.x += c.dt * state_.x_dot;
  state_.theta_dot += c.dt * theta_acc;
  state_.theta += c.dt * state_.theta_dot;
  ++steps_;

  double reward = 0.0;
  if (std::cos(state_.theta) > 0.95 && std::abs(state_.x) < 1.0 && std::abs(state_.x_dot) < 1.0 &&
      std::abs(state_.theta_dot) < 1.0) {
    reward = 1.0;
  }
  if (action != static_cast<int>(CartpoleAction::kNoOp)) reward -= c.move_cost;

  done_ = steps_ >= c.max_steps || std::abs(state_.x) > c.position_threshold;
  return {observation(), reward, done_};
}

}  // namespace pinslab
