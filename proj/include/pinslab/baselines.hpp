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

#ifndef PINSLAB_BASELINES_HPP_
#define PINSLAB_BASELINES_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "pinslab/mdp.hpp"
#include "pinslab/neural.hpp"
#include "pinslab/replay.hpp"
#include "pinslab/rng.hpp"

namespace pinslab {

// One squared-TD Adam step on `net`: the prediction (net + scale * prior)(s, a)
// regresses onto r + gamma * (1 - done) * max_a' (target + scale * prior)(s', a').
// Rows with active[i] == 0 contribute no gradient; the loss is averaged over the
// whole batch. Returns false (no step taken) when no row is active.
bool td_regression_step(Mlp& net, AdamState& opt, const Mlp& target, const Mlp* prior, double prior_scale,
                        const Minibatch& batch, double gamma, const std::vector<std::uint8_t>* active = nullptr);

struct EnsembleConfig {
  int members = 5;
  std::vector<int> hidden{50};
  double prior_scale = 10.0;
  double gamma = 1.0;
  int batch_size = 64;
  int n_batches = 10;
  double learning_rate = 1e-3;
  int target_period = 10;
  size_t buffer_capacity = 0;

  void validate() const;
};

// Bootstrapped ensemble with additive frozen priors; prior_scale 0 is the
// prior-free variant.
class EnsembleAgent {
 public:
  EnsembleAgent(int observation_size, int num_actions, EnsembleConfig config, std::uint64_t seed);

  int members() const { return config_.members; }
  const EnsembleConfig& config() const { return config_; }
  int episodes_completed() const { return episodes_; }

  Eigen::VectorXd member_values(const Eigen::VectorXd& s, int k) const;
  int act(const Eigen::VectorXd& s, int k) const;
  int sample_member();

  bool learn_from_buffer(int n_batches, int batch_size);
  void train_batch(std::span<const size_t> rows);
  double run_episode(Environment& env);
  void sync_targets();

  ReplayBuffer& buffer() { return buffer_; }
  const Mlp& member(int k) const { return members_.at(static_cast<size_t>(k)); }
  Mlp& mutable_member(int k) { return members_.at(static_cast<size_t>(k)); }
  const Mlp& member_target(int k) const { return targets_.at(static_cast<size_t>(k)); }
  const Mlp& prior(int k) const { return priors_.at(static_cast<size_t>(k)); }
  std::uint64_t prior_checksum() const;

  void save(std::ostream& out) const;
  void load(std::istream& in);

 private:
  int observation_size_;
  int num_actions_;
  EnsembleConfig config_;
  RngStream init_rng_;
  RngStream index_rng_;
  RngStream mask_rng_;
  RngStream batch_rng_;
  std::vector<Mlp> members_;
  std::vector<Mlp> targets_;
  std::vector<Mlp> priors_;
  std::vector<AdamState> opts_;
  ReplayBuffer buffer_;
  int episodes_ = 0;
};

struct DqnConfig {
  std::vector<int> hidden{50};
  double epsilon = 0.1;
  double gamma = 1.0;
  int batch_size = 64;
  int n_batches = 10;
  double learning_rate = 1e-3;
  int target_period = 10;
  size_t buffer_capacity = 0;

  void validate() const;
};

int epsgreedy_act(const Mlp& net, const Eigen::VectorXd& s, double epsilon, RngStream& rng);

class DqnAgent {
 public:
  DqnAgent(int observation_size, int num_actions, DqnConfig config, std::uint64_t seed);

  const DqnConfig& config() const { return config_; }
  int act(const Eigen::VectorXd& s) { return epsgreedy_act(net_, s, config_.epsilon, explore_rng_); }
  bool learn_from_buffer(int n_batches, int batch_size);
  void train_batch(std::span<const size_t> rows);
  double run_episode(Environment& env);
  void sync_targets() { target_.copy_parameters_from(net_); }

  ReplayBuffer& buffer() { return buffer_; }
  const Mlp& net() const { return net_; }
  const Mlp& target() const { return target_; }

 private:
  int observation_size_;
  int num_actions_;
  DqnConfig config_;
  RngStream init_rng_;
  RngStream explore_rng_;
  RngStream batch_rng_;
  Mlp net_;
  Mlp target_;
  AdamState opt_;
  ReplayBuffer buffer_;
  int episodes_ = 0;
};

}  // namespace pinslab

#endif  // PINSLAB_BASELINES_HPP_
