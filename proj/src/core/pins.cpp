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

#include "pinslab/pins.hpp"

#include <fstream>
#include <iostream>

#include "pinslab/error.hpp"

namespace pinslab {

namespace {

MlpShape mean_shape(int obs, int actions, const PinsConfig& c) {
  std::vector<int> layers{obs};
  layers.insert(layers.end(), c.mean_hidden.begin(), c.mean_hidden.end());
  layers.push_back(actions);
  return MlpShape::from_layers(layers, OutputActivation::kLinear, 1);
}

MlpShape uncertainty_shape(int obs, int actions, const PinsConfig& c) {
  std::vector<int> layers{obs};
  layers.insert(layers.end(), c.uncertainty_hidden.begin(), c.uncertainty_hidden.end());
  layers.push_back(actions);
  return MlpShape::from_layers(layers, OutputActivation::kSoftplus, c.heads);
}

const PinsConfig& checked(const PinsConfig& c) {
  c.validate();
  return c;
}

constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace

int argmax_action(const Eigen::Ref<const Eigen::VectorXd>& values) {
  if (values.size() == 0) fail(ErrorCode::kNoAction, "no actions to choose from");
  int best = 0;
  for (Eigen::Index a = 1; a < values.size(); ++a) {
    if (values[a] > values[best]) best = static_cast<int>(a);
  }
  return best;
}

double PinsConfig::sigma_at(int episode) const {
  if (episode >= decay_episodes) return sigma_final;
  if (episode <= 1) return sigma_initial;
  const double frac = static_cast<double>(episode - 1) / static_cast<double>(decay_episodes - 1);
  return sigma_initial + (sigma_final - sigma_initial) * frac;
}

void PinsConfig::validate() const {
  if (heads < 1) fail(ErrorCode::kConfig, "heads must be >= 1");
  if (mean_hidden.empty() || uncertainty_hidden.empty()) fail(ErrorCode::kConfig, "networks need a hidden layer");
  if (!(gamma > 0.0 && gamma <= 1.0)) fail(ErrorCode::kConfig, "gamma must lie in (0, 1]");
  if (sigma_initial < 0.0 || sigma_final < 0.0) fail(ErrorCode::kConfig, "sigma must be >= 0");
  if (batch_size < 1 || n_batches < 0) fail(ErrorCode::kConfig, "batch_size must be >= 1 and n_batches >= 0");
  if (!(learning_rate > 0.0)) fail(ErrorCode::kConfig, "learning rate must be > 0");
  if (target_period < 1) fail(ErrorCode::kConfig, "target_period must be >= 1");
}

PinsAgent::PinsAgent(int observation_size, int num_actions, PinsConfig config, std::uint64_t seed)
    : observation_size_(observation_size),
      num_actions_(num_actions),
      config_(checked(config)),
      init_rng_(seed, streams::kNetworkInit),
      index_rng_(seed, streams::kIndexSampling),
      mask_rng_(seed, streams::kMaskSampling),
      batch_rng_(seed, streams::kMinibatch),
      mean_(Mlp::init(mean_shape(observation_size, num_actions, config_), init_rng_)),
      uncertainty_(Mlp::init(uncertainty_shape(observation_size, num_actions, config_), init_rng_)),
      mean_target_(mean_),
      uncertainty_target_(uncertainty_),
      mean_prior_(Mlp::init(mean_.shape(), init_rng_, false)),
      uncertainty_prior_(Mlp::init(uncertainty_.shape(), init_rng_, false)),
      mean_opt_(AdamState::for_network(mean_.shape(), config_.learning_rate)),
      uncertainty_opt_(AdamState::for_network(uncertainty_.shape(), config_.learning_rate)),
      buffer_(config_.heads, config_.buffer_capacity),
      head_counts_(static_cast<size_t>(config_.heads), 0) {
  if (num_actions < 1) fail(ErrorCode::kConfig, "agent needs at least one action");
}

Eigen::VectorXd PinsAgent::sampled_values(const Eigen::VectorXd& s, double z, int head) const {
  if (head < 0 || head >= config_.heads) {
    fail(ErrorCode::kIndex, "head " + std::to_string(head) + " out of range for " + std::to_string(config_.heads));
  }
  Eigen::VectorXd q = mean_.forward(s) + config_.beta1 * mean_prior_.forward(s);
  q += z * (uncertainty_.forward(s, head) + config_.beta2 * uncertainty_prior_.forward(s, head));
  return q;
}

int PinsAgent::act(const Eigen::VectorXd& s, double z, int head) const {
  return argmax_action(sampled_values(s, z, head));
}

int PinsAgent::select_abar(const Eigen::VectorXd& s_next) const {
  return argmax_action(mean_target_.forward(s_next) + config_.beta1 * mean_prior_.forward(s_next));
}

int PinsAgent::select_atilde(const Eigen::VectorXd& s_next, double z, int head) const {
  if (head < 0 || head >= config_.heads) fail(ErrorCode::kIndex, "head index out of range");
  Eigen::VectorXd q = mean_target_.forward(s_next) + config_.beta1 * mean_prior_.forward(s_next);
  q += z * (uncertainty_target_.forward(s_next, head) + config_.beta2 * uncertainty_prior_.forward(s_next, head));
  return argmax_action(q);
}

EpisodeIndex PinsAgent::sample_index() {
  EpisodeIndex idx;
  idx.z = index_rng_.normal();
  idx.head = index_rng_.uniform_int(config_.heads);
  return idx;
}

bool PinsAgent::learn_from_buffer(int n_batches, int batch_size, double sigma) {
  if (buffer_.empty()) {
    if (episodes_ > 0) std::cerr << "pinslab: learn_from_buffer called with an empty buffer\n";
    return false;
  }
  for (int n = 0; n < n_batches; ++n) {
    const std::vector<size_t> rows = buffer_.sample_indices(batch_size, batch_rng_);
    train_batch(rows, sigma);
  }
  return true;
}

void PinsAgent::train_batch(std::span<const size_t> rows, double sigma) {
  const Minibatch b = buffer_.gather(rows);
  const int n = b.size();
  if (n == 0) return;
  const int A = num_actions_;
  const int U = config_.heads;
  const double g = config_.gamma;
  const bool sampled = config_.selector == TargetSelector::kSampled;
  const bool need_uncertainty = config_.train_uncertainty || sampled;

  const ForwardCache mean_cache = forward_cached(mean_, b.s);
  const Eigen::MatrixXd mean_prior_s = mean_prior_.forward_batch(b.s);
  const Eigen::MatrixXd mean_next =
      mean_target_.forward_batch(b.s_next) + config_.beta1 * mean_prior_.forward_batch(b.s_next);

  ForwardCache unc_cache;
  Eigen::MatrixXd unc_prior_s, unc_next;
  if (need_uncertainty) {
    unc_cache = forward_cached(uncertainty_, b.s);
    unc_prior_s = uncertainty_prior_.forward_batch(b.s);
    unc_next = uncertainty_target_.forward_batch(b.s_next) +
               config_.beta2 * uncertainty_prior_.forward_batch(b.s_next);
  }

  trace_.rows.assign(rows.begin(), rows.end());
  trace_.heads.assign(static_cast<size_t>(n), -1);
  trace_.target_actions.assign(static_cast<size_t>(n), 0);

  std::vector<int> active;
  active.reserve(static_cast<size_t>(U));
  for (int i = 0; i < n; ++i) {
    const auto& mask = buffer_.at(rows[static_cast<size_t>(i)]).mask;
    if (need_uncertainty) {
      active.clear();
      for (int j = 0; j < U; ++j) {
        if (mask[static_cast<size_t>(j)]) active.push_back(j);
      }
      if (!active.empty()) {
        trace_.heads[static_cast<size_t>(i)] = active[static_cast<size_t>(batch_rng_.uniform_int(static_cast<int>(active.size())))];
      }
    }
    if (sampled) {
      int u = trace_.heads[static_cast<size_t>(i)];
      if (u < 0) u = batch_rng_.uniform_int(U);
      const double z = batch_rng_.normal();
      Eigen::VectorXd q = mean_next.col(i) + z * unc_next.col(i).segment(static_cast<Eigen::Index>(u) * A, A);
      trace_.target_actions[static_cast<size_t>(i)] = argmax_action(q);
    } else {
      trace_.target_actions[static_cast<size_t>(i)] = argmax_action(mean_next.col(i));
    }
  }

  Eigen::MatrixXd mean_grad = Eigen::MatrixXd::Zero(A, n);
  for (int i = 0; i < n; ++i) {
    const size_t si = static_cast<size_t>(i);
    const int a = b.a[si];
    const int a_next = trace_.target_actions[si];
    const double cont = b.done[si] ? 0.0 : g;
    const double pred = mean_cache.output(a, i) + config_.beta1 * mean_prior_s(a, i);
    const double target = b.r[si] + cont * mean_next(a_next, i);
    mean_grad(a, i) = 2.0 * (pred - target);
  }
  adam_step(mean_, backprop(mean_, mean_cache, mean_grad), mean_opt_);

  if (!config_.train_uncertainty) return;
  Eigen::MatrixXd unc_grad = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(U) * A, n);
  for (int i = 0; i < n; ++i) {
    const size_t si = static_cast<size_t>(i);
    const int u = trace_.heads[si];
    if (u < 0) continue;
    const Eigen::Index row = static_cast<Eigen::Index>(u) * A + b.a[si];
    const Eigen::Index row_next = static_cast<Eigen::Index>(u) * A + trace_.target_actions[si];
    const double cont = b.done[si] ? 0.0 : g;
    const double pred = unc_cache.output(row, i) + config_.beta2 * unc_prior_s(row, i);
    const double target = sigma + cont * unc_next(row_next, i);
    unc_grad(row, i) = 2.0 * (pred - target);
    ++head_counts_[static_cast<size_t>(u)];
  }
  adam_step(uncertainty_, backprop(uncertainty_, unc_cache, unc_grad), uncertainty_opt_);
}

void PinsAgent::sync_targets() {
  mean_target_.copy_parameters_from(mean_);
  uncertainty_target_.copy_parameters_from(uncertainty_);
}

double PinsAgent::run_episode(Environment& env) {
  if (env.observation_size() != observation_size_ || env.num_actions() != num_actions_) {
    fail(ErrorCode::kConfig, "environment shape does not match the agent");
  }
  const EpisodeIndex idx = sample_index();
  learn_from_buffer(config_.n_batches, config_.batch_size, config_.sigma_at(episodes_ + 1));
  Eigen::VectorXd s = env.reset();
  double total = 0.0;
  while (!env.done()) {
    const int a = act(s, idx.z, idx.head);
    StepResult step = env.step(a);
    total += step.reward;
    TransitionRecord rec{s, a, step.reward, step.observation, step.done, draw_mask(config_.heads, mask_rng_)};
    s = std::move(step.observation);
    buffer_.add(std::move(rec));
  }
  ++episodes_;
  if (episodes_ % config_.target_period == 0) sync_targets();
  return total;
}

std::uint64_t PinsAgent::prior_checksum() const {
  return mean_prior_.checksum() ^ (uncertainty_prior_.checksum() * 0x9e3779b97f4a7c15ULL);
}

void PinsAgent::save(std::ostream& out) const {
  binio::write_magic(out, "PINS");
  binio::write_u32(out, kCheckpointVersion);
  binio::write_u64(out, static_cast<std::uint64_t>(episodes_));
  for (const Mlp* net : {&mean_, &uncertainty_, &mean_target_, &uncertainty_target_, &mean_prior_, &uncertainty_prior_}) {
    write_mlp(out, *net);
  }
  write_adam(out, mean_opt_);
  write_adam(out, uncertainty_opt_);
  if (!out) fail(ErrorCode::kIo, "failed writing agent checkpoint");
}

void PinsAgent::load(std::istream& in) {
  binio::expect_magic(in, "PINS");
  if (binio::read_u32(in) != kCheckpointVersion) fail(ErrorCode::kFormat, "unsupported agent checkpoint version");
  const auto episodes = static_cast<int>(binio::read_u64(in));
  Mlp* nets[] = {&mean_, &uncertainty_, &mean_target_, &uncertainty_target_, &mean_prior_, &uncertainty_prior_};
  std::vector<Mlp> loaded;
  for (Mlp* net : nets) {
    Mlp m = read_mlp(in);
    if (!(m.shape() == net->shape())) fail(ErrorCode::kFormat, "checkpoint network shape does not match the agent");
    loaded.push_back(std::move(m));
  }
  AdamState mean_opt = read_adam(in, mean_.shape());
  AdamState unc_opt = read_adam(in, uncertainty_.shape());
  for (size_t k = 0; k < loaded.size(); ++k) *nets[k] = std::move(loaded[k]);
  mean_prior_.set_trainable(false);
  uncertainty_prior_.set_trainable(false);
  mean_opt_ = std::move(mean_opt);
  uncertainty_opt_ = std::move(unc_opt);
  episodes_ = episodes;
}

void PinsAgent::save_file(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot open " + path + " for writing");
  save(out);
}

void PinsAgent::load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path);
  load(in);
}

std::vector<double> live_is(PinsAgent& agent, Environment& env, int episodes) {
  if (episodes < 0) fail(ErrorCode::kInvalidArgument, "episode count must be >= 0");
  std::vector<double> log;
  log.reserve(static_cast<size_t>(episodes));
  for (int l = 0; l < episodes; ++l) log.push_back(agent.run_episode(env));
  return log;
}

}  // namespace pinslab
