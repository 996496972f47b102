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

#ifndef PINSLAB_ENVIRONMENTS_HPP_
#define PINSLAB_ENVIRONMENTS_HPP_

#include <array>
#include <cstdint>
#include <vector>

#include "pinslab/mdp.hpp"
#include "pinslab/rng.hpp"

namespace pinslab {

// ---------------------------------------------------------------------------
// Deep-sea
// ---------------------------------------------------------------------------

double deep_sea_optimal_return(int size);

// N x N deterministic gridworld. Raw action equal to the cell's mask bit means
// "left", the other raw action means "right". Observation is the one-hot
// encoding of (row, col); the terminal observation is all zeros.
class DeepSeaEnv final : public Environment {
 public:
  DeepSeaEnv(int size, std::uint64_t seed);

  int size() const { return size_; }
  int row() const { return row_; }
  int col() const { return col_; }
  int steps_taken() const { return row_; }
  int mask(int row, int col) const { return mask_[static_cast<size_t>(row * size_ + col)]; }
  const std::vector<std::uint8_t>& mask_bits() const { return mask_; }
  bool is_right(int raw_action) const;

  int observation_size() const override { return size_ * size_; }
  int num_actions() const override { return 2; }
  Eigen::VectorXd reset() override;
  StepResult step(int raw_action) override;
  bool done() const override { return row_ >= size_; }
  Eigen::VectorXd observation() const;

 private:
  int size_;
  int row_ = 0;
  int col_ = 0;
  std::vector<std::uint8_t> mask_;
};

// (h, x) = (row, col) view for the tabular agent. Horizon and state count are
// both N; the terminal x' is clamped into range since it is never consulted.
class DeepSeaTabularEnv final : public TabularEnv {
 public:
  explicit DeepSeaTabularEnv(DeepSeaEnv env) : env_(std::move(env)) {}
  int horizon() const override { return env_.size(); }
  int num_states() const override { return env_.size(); }
  int num_actions() const override { return 2; }
  StateId reset() override;
  Outcome step(int action) override;
  const DeepSeaEnv& env() const { return env_; }

 private:
  DeepSeaEnv env_;
};

// ---------------------------------------------------------------------------
// Cartpole swing-up
// ---------------------------------------------------------------------------

struct CartpoleConstants {
  double cart_mass = 1.0;
  double pole_mass = 0.1;
  double pole_half_length = 0.5;
  double gravity = 9.8;
  double force_magnitude = 10.0;
  double dt = 0.01;
  double position_threshold = 5.0;
  int max_steps = 1000;
  double move_cost = 0.05;
  double init_noise = 0.05;
};

struct CartpoleState {
  double x = 0.0;
  double x_dot = 0.0;
  double theta = 0.0;  // 0 is upright, pi hangs down
  double theta_dot = 0.0;
};

enum class CartpoleAction : int { kPushLeft = 0, kNoOp = 1, kPushRight = 2 };

class CartpoleSwingupEnv final : public Environment {
 public:
  static constexpr int kObservationSize = 8;

  explicit CartpoleSwingupEnv(std::uint64_t seed, CartpoleConstants constants = {});

  int observation_size() const override { return kObservationSize; }
  int num_actions() const override { return 3; }
  Eigen::VectorXd reset() override;
  StepResult step(int action) override;
  bool done() const override { return done_; }

  const CartpoleState& state() const { return state_; }
  const CartpoleConstants& constants() const { return constants_; }
  int steps_taken() const { return steps_; }
  // Places the system in an arbitrary state mid-episode (tests, replays).
  void set_state(const CartpoleState& s, int steps_taken = 0);
  Eigen::VectorXd observation() const;

 private:
  CartpoleConstants constants_;
  RngStream rng_;
  CartpoleState state_;
  int steps_ = 0;
  bool done_ = false;
};

// ---------------------------------------------------------------------------
// Tabular MDP with categorical outcome distributions
// ---------------------------------------------------------------------------

// Outcome o = (r, x') is indexed as r * |X| + x'. Every timestep, including
// the last one, has an outcome distribution; at h = H-1 only the reward part
// matters because the episode terminates.
class TabularMDP {
 public:
  TabularMDP(int horizon, int num_states, int num_actions, int initial_state = 0);

  int horizon() const { return horizon_; }
  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  int num_outcomes() const { return 2 * num_states_; }
  int initial_state() const { return initial_state_; }

  double& prob(int h, int x, int a, int o) { return probs_[index(h, x, a, o)]; }
  double prob(int h, int x, int a, int o) const { return probs_[index(h, x, a, o)]; }
  const double* distribution(int h, int x, int a) const { return &probs_[index(h, x, a, 0)]; }
  Outcome outcome(int o) const { return {static_cast<double>(o / num_states_), o % num_states_}; }
  int outcome_index(const Outcome& o) const;

  Outcome sample(int h, int x, int a, RngStream& rng) const;
  // Throws unless every distribution lies on the simplex (tolerance 1e-9).
  void validate() const;

 private:
  size_t index(int h, int x, int a, int o) const {
    return ((static_cast<size_t>(h) * num_states_ + x) * num_actions_ + a) * num_outcomes() + o;
  }
  int horizon_;
  int num_states_;
  int num_actions_;
  int initial_state_;
  std::vector<double> probs_;
};

class DirichletPrior {
 public:
  // Every alpha vector is (beta / 2|X|, ..., beta / 2|X|).
  static DirichletPrior uniform(int horizon, int num_states, int num_actions, double beta);
  // Random positive alpha vectors rescaled to sum to beta.
  static DirichletPrior random(int horizon, int num_states, int num_actions, double beta,
                               RngStream& rng);

  DirichletPrior(int horizon, int num_states, int num_actions, std::vector<double> alpha);

  int horizon() const { return horizon_; }
  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  int num_outcomes() const { return 2 * num_states_; }
  double beta() const { return beta_; }
  const double* alpha(int h, int x, int a) const;
  const std::vector<double>& alpha_values() const { return alpha_; }

 private:
  int horizon_;
  int num_states_;
  int num_actions_;
  std::vector<double> alpha_;
  double beta_ = 0.0;
};

TabularMDP dirichlet_mdp_sample(const DirichletPrior& prior, RngStream& rng);

// Dirichlet draw in log space so that tiny concentrations do not underflow.
std::vector<double> sample_dirichlet(const double* alpha, int n, RngStream& rng);

class MdpEnv final : public TabularEnv {
 public:
  MdpEnv(const TabularMDP& mdp, std::uint64_t seed);
  int horizon() const override { return mdp_->horizon(); }
  int num_states() const override { return mdp_->num_states(); }
  int num_actions() const override { return mdp_->num_actions(); }
  StateId reset() override;
  Outcome step(int action) override;

 private:
  const TabularMDP* mdp_;
  RngStream rng_;
  StateId state_;
};

}  // namespace pinslab

#endif  // PINSLAB_ENVIRONMENTS_HPP_
