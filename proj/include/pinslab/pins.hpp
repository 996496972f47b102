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

#ifndef PINSLAB_PINS_HPP_
#define PINSLAB_PINS_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "pinslab/mdp.hpp"
#include "pinslab/neural.hpp"
#include "pinslab/replay.hpp"
#include "pinslab/rng.hpp"

namespace pinslab {

// Action used inside the bootstrap target.
enum class TargetSelector { kMean, kSampled };

struct PinsConfig {
  std::vector<int> mean_hidden{300};
  std::vector<int> uncertainty_hidden{512};
  int heads = 10;
  double beta1 = 2.0;
  double beta2 = 2.0;
  double gamma = 1.0;
  // Noise scale moves linearly from sigma_initial (episode 1) to sigma_final
  // (episode decay_episodes) and stays there.
  double sigma_initial = 2.0;
  double sigma_final = 2.0;
  int decay_episodes = 1;
  int batch_size = 64;
  int n_batches = 10;
  double learning_rate = 1e-3;
  int target_period = 10;
  TargetSelector selector = TargetSelector::kMean;
  size_t buffer_capacity = 0;
  bool train_uncertainty = true;

  double sigma_at(int episode) const;
  void validate() const;
};

struct EpisodeIndex {
  double z = 0.0;
  int head = 0;
};

// What the last training batch did; heads[i] is the head row i trained, or -1.
struct BatchTrace {
  std::vector<size_t> rows;
  std::vector<int> heads;
  std::vector<int> target_actions;
};

class PinsAgent {
 public:
  PinsAgent(int observation_size, int num_actions, PinsConfig config, std::uint64_t seed);

  int observation_size() const { return observation_size_; }
  int num_actions() const { return num_actions_; }
  const PinsConfig& config() const { return config_; }
  int episodes_completed() const { return episodes_; }

  // Sampled value with additive priors for every action.
  Eigen::VectorXd sampled_values(const Eigen::VectorXd& s, double z, int head) const;
  int act(const Eigen::VectorXd& s, double z, int head) const;
  int select_abar(const Eigen::VectorXd& s_next) const;
  int select_atilde(const Eigen::VectorXd& s_next, double z, int head) const;

  EpisodeIndex sample_index();
  // Runs n_batches minibatch updates from the agent's buffer; returns false
  // (and does nothing) when the buffer is empty.
  bool learn_from_buffer(int n_batches, int batch_size, double sigma);
  void train_batch(std::span<const size_t> rows, double sigma);
  // One full interaction episode per the live loop; returns the episode return.
  double run_episode(Environment& env);
  void sync_targets();

  ReplayBuffer& buffer() { return buffer_; }
  const ReplayBuffer& buffer() const { return buffer_; }
  const BatchTrace& last_batch() const { return trace_; }
  const std::vector<long>& head_update_counts() const { return head_counts_; }

  const Mlp& mean_net() const { return mean_; }
  const Mlp& uncertainty_net() const { return uncertainty_; }
  const Mlp& mean_target() const { return mean_target_; }
  const Mlp& uncertainty_target() const { return uncertainty_target_; }
  const Mlp& mean_prior() const { return mean_prior_; }
  const Mlp& uncertainty_prior() const { return uncertainty_prior_; }
  Mlp& mutable_mean_net() { return mean_; }
  Mlp& mutable_uncertainty_net() { return uncertainty_; }
  std::uint64_t prior_checksum() const;

  // Networks, optimizer moments and the episode counter. Replay contents and
  // RNG positions are not part of the checkpoint.
  void save(std::ostream& out) const;
  void load(std::istream& in);
  void save_file(const std::string& path) const;
  void load_file(const std::string& path);

 private:
  int observation_size_;
  int num_actions_;
  PinsConfig config_;
  RngStream init_rng_;
  RngStream index_rng_;
  RngStream mask_rng_;
  RngStream batch_rng_;
  Mlp mean_;
  Mlp uncertainty_;
  Mlp mean_target_;
  Mlp uncertainty_target_;
  Mlp mean_prior_;
  Mlp uncertainty_prior_;
  AdamState mean_opt_;
  AdamState uncertainty_opt_;
  ReplayBuffer buffer_;
  int episodes_ = 0;
  BatchTrace trace_;
  std::vector<long> head_counts_;
};

std::vector<double> live_is(PinsAgent& agent, Environment& env, int episodes);

// Lowest-index argmax.
int argmax_action(const Eigen::Ref<const Eigen::VectorXd>& values);

}  // namespace pinslab

#endif  // PINSLAB_PINS_HPP_
