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

#include "pinslab/baselines.hpp"

#include <istream>
#include <ostream>
#include <string>

#include "pinslab/error.hpp"
#include "pinslab/pins.hpp"

namespace pinslab {

namespace {

MlpShape q_shape(int obs, int actions, const std::vector<int>& hidden) {
  std::vector<int> layers{obs};
  layers.insert(layers.end(), hidden.begin(), hidden.end());
  layers.push_back(actions);
  return MlpShape::from_layers(layers);
}

void check_train_knobs(int batch_size, int n_batches, double lr, int target_period, double gamma) {
  if (batch_size < 1 || n_batches < 0) fail(ErrorCode::kConfig, "batch_size must be >= 1 and n_batches >= 0");
  if (!(lr > 0.0)) fail(ErrorCode::kConfig, "learning rate must be > 0");
  if (target_period < 1) fail(ErrorCode::kConfig, "target_period must be >= 1");
  if (!(gamma > 0.0 && gamma <= 1.0)) fail(ErrorCode::kConfig, "gamma must lie in (0, 1]");
}

constexpr std::uint32_t kCheckpointVersion = 1;

}  // namespace

bool td_regression_step(Mlp& net, AdamState& opt, const Mlp& target, const Mlp* prior, double prior_scale,
                        const Minibatch& batch, double gamma, const std::vector<std::uint8_t>* active) {
  const int n = batch.size();
  if (n == 0) return false;
  bool any = false;
  for (int i = 0; i < n; ++i) any = any || active == nullptr || (*active)[static_cast<size_t>(i)];
  if (!any) return false;

  const ForwardCache cache = forward_cached(net, batch.s);
  Eigen::MatrixXd next = target.forward_batch(batch.s_next);
  Eigen::MatrixXd prior_s;
  if (prior != nullptr) {
    next += prior_scale * prior->forward_batch(batch.s_next);
    prior_s = prior->forward_batch(batch.s);
  }
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(cache.output.rows(), n);
  for (int i = 0; i < n; ++i) {
    const size_t si = static_cast<size_t>(i);
    if (active != nullptr && !(*active)[si]) continue;
    const int a = batch.a[si];
    double pred = cache.output(a, i);
    if (prior != nullptr) pred += prior_scale * prior_s(a, i);
    const double cont = batch.done[si] ? 0.0 : gamma;
    const double y = batch.r[si] + cont * next(argmax_action(next.col(i)), i);
    grad(a, i) = 2.0 * (pred - y);
  }
  adam_step(net, backprop(net, cache, grad), opt);
  return true;
}

void EnsembleConfig::validate() const {
  if (members < 1) fail(ErrorCode::kConfig, "ensemble needs at least one member");
  if (hidden.empty()) fail(ErrorCode::kConfig, "ensemble networks need a hidden layer");
  if (prior_scale < 0.0) fail(ErrorCode::kConfig, "prior scale must be >= 0");
  check_train_knobs(batch_size, n_batches, learning_rate, target_period, gamma);
}

EnsembleAgent::EnsembleAgent(int observation_size, int num_actions, EnsembleConfig config, std::uint64_t seed)
    : observation_size_(observation_size),
      num_actions_(num_actions),
      config_(std::move(config)),
      init_rng_(seed, streams::kNetworkInit),
      index_rng_(seed, streams::kIndexSampling),
      mask_rng_(seed, streams::kMaskSampling),
      batch_rng_(seed, streams::kMinibatch),
      buffer_(config_.members, config_.buffer_capacity) {
  config_.validate();
  const MlpShape shape = q_shape(observation_size, num_actions, config_.hidden);
  for (int k = 0; k < config_.members; ++k) {
    members_.push_back(Mlp::init(shape, init_rng_));
    targets_.push_back(members_.back());
    opts_.push_back(AdamState::for_network(shape, config_.learning_rate));
  }
  for (int k = 0; k < config_.members; ++k) priors_.push_back(Mlp::init(shape, init_rng_, false));
}

Eigen::VectorXd EnsembleAgent::member_values(const Eigen::VectorXd& s, int k) const {
  if (k < 0 || k >= config_.members) {
    fail(ErrorCode::kIndex, "member " + std::to_string(k) + " out of range for " + std::to_string(config_.members));
  }
  const size_t sk = static_cast<size_t>(k);
  return members_[sk].forward(s) + config_.prior_scale * priors_[sk].forward(s);
}

int EnsembleAgent::act(const Eigen::VectorXd& s, int k) const { return argmax_action(member_values(s, k)); }

int EnsembleAgent::sample_member() { return index_rng_.uniform_int(config_.members); }

bool EnsembleAgent::learn_from_buffer(int n_batches, int batch_size) {
  if (buffer_.empty()) return false;
  for (int n = 0; n < n_batches; ++n) {
    const std::vector<size_t> rows = buffer_.sample_indices(batch_size, batch_rng_);
    train_batch(rows);
  }
  return true;
}

void EnsembleAgent::train_batch(std::span<const size_t> rows) {
  const Minibatch b = buffer_.gather(rows);
  std::vector<std::uint8_t> active(rows.size());
  for (int k = 0; k < config_.members; ++k) {
    for (size_t i = 0; i < rows.size(); ++i) active[i] = buffer_.at(rows[i]).mask[static_cast<size_t>(k)];
    const size_t sk = static_cast<size_t>(k);
    td_regression_step(members_[sk], opts_[sk], targets_[sk], &priors_[sk], config_.prior_scale, b, config_.gamma,
                       &active);
  }
}

void EnsembleAgent::sync_targets() {
  for (size_t k = 0; k < members_.size(); ++k) targets_[k].copy_parameters_from(members_[k]);
}

double EnsembleAgent::run_episode(Environment& env) {
  if (env.observation_size() != observation_size_ || env.num_actions() != num_actions_) {
    fail(ErrorCode::kConfig, "environment shape does not match the agent");
  }
  const int k = sample_member();
  learn_from_buffer(config_.n_batches, config_.batch_size);
  Eigen::VectorXd s = env.reset();
  double total = 0.0;
  while (!env.done()) {
    const int a = act(s, k);
    StepResult step = env.step(a);
    total += step.reward;
    TransitionRecord rec{s, a, step.reward, step.observation, step.done, draw_mask(config_.members, mask_rng_)};
    s = std::move(step.observation);
    buffer_.add(std::move(rec));
  }
  ++episodes_;
  if (episodes_ % config_.target_period == 0) sync_targets();
  return total;
}

std::uint64_t EnsembleAgent::prior_checksum() const {
  std::uint64_t h = 0;
  for (const Mlp& p : priors_) h = h * 0x100000001b3ULL ^ p.checksum();
  return h;
}

void EnsembleAgent::save(std::ostream& out) const {
  binio::write_magic(out, "PENS");
  binio::write_u32(out, kCheckpointVersion);
  binio::write_u32(out, static_cast<std::uint32_t>(config_.members));
  binio::write_u64(out, static_cast<std::uint64_t>(episodes_));
  for (size_t k = 0; k < members_.size(); ++k) {
    write_mlp(out, members_[k]);
    write_mlp(out, targets_[k]);
    write_mlp(out, priors_[k]);
    write_adam(out, opts_[k]);
  }
  if (!out) fail(ErrorCode::kIo, "failed writing ensemble checkpoint");
}

void EnsembleAgent::load(std::istream& in) {
  binio::expect_magic(in, "PENS");
  if (binio::read_u32(in) != kCheckpointVersion) fail(ErrorCode::kFormat, "unsupported ensemble checkpoint version");
  if (static_cast<int>(binio::read_u32(in)) != config_.members) {
    fail(ErrorCode::kFormat, "checkpoint member count does not match the agent");
  }
  const auto episodes = static_cast<int>(binio::read_u64(in));
  const MlpShape& shape = members_.front().shape();
  std::vector<Mlp> members, targets, priors;
  std::vector<AdamState> opts;
  for (int k = 0; k < config_.members; ++k) {
    for (auto* dst : {&members, &targets, &priors}) {
      Mlp m = read_mlp(in);
      if (!(m.shape() == shape)) fail(ErrorCode::kFormat, "checkpoint network shape does not match the agent");
      dst->push_back(std::move(m));
    }
    opts.push_back(read_adam(in, shape));
  }
  for (Mlp& p : priors) p.set_trainable(false);
  members_ = std::move(members);
  targets_ = std::move(targets);
  priors_ = std::move(priors);
  opts_ = std::move(opts);
  episodes_ = episodes;
}

void DqnConfig::validate() const {
  if (hidden.empty()) fail(ErrorCode::kConfig, "network needs a hidden layer");
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) fail(ErrorCode::kConfig, "epsilon must lie in [0, 1]");
  check_train_knobs(batch_size, n_batches, learning_rate, target_period, gamma);
}

int epsgreedy_act(const Mlp& net, const Eigen::VectorXd& s, double epsilon, RngStream& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) fail(ErrorCode::kInvalidArgument, "epsilon must lie in [0, 1]");
  const int actions = net.shape().output;
  if (epsilon > 0.0 && rng.uniform() < epsilon) return rng.uniform_int(actions);
  return argmax_action(net.forward(s));
}

DqnAgent::DqnAgent(int observation_size, int num_actions, DqnConfig config, std::uint64_t seed)
    : observation_size_(observation_size),
      num_actions_(num_actions),
      config_(std::move(config)),
      init_rng_(seed, streams::kNetworkInit),
      explore_rng_(seed, streams::kExploration),
      batch_rng_(seed, streams::kMinibatch),
      net_(Mlp::init(q_shape(observation_size, num_actions, config_.hidden), init_rng_)),
      target_(net_),
      opt_(AdamState::for_network(net_.shape(), config_.learning_rate)),
      buffer_(0, config_.buffer_capacity) {
  config_.validate();
}

bool DqnAgent::learn_from_buffer(int n_batches, int batch_size) {
  if (buffer_.empty()) return false;
  for (int n = 0; n < n_batches; ++n) {
    const std::vector<size_t> rows = buffer_.sample_indices(batch_size, batch_rng_);
    train_batch(rows);
  }
  return true;
}

void DqnAgent::train_batch(std::span<const size_t> rows) {
  td_regression_step(net_, opt_, target_, nullptr, 0.0, buffer_.gather(rows), config_.gamma);
}

double DqnAgent::run_episode(Environment& env) {
  if (env.observation_size() != observation_size_ || env.num_actions() != num_actions_) {
    fail(ErrorCode::kConfig, "environment shape does not match the agent");
  }
  learn_from_buffer(config_.n_batches, config_.batch_size);
  Eigen::VectorXd s = env.reset();
  double total = 0.0;
  while (!env.done()) {
    const int a = act(s);
    StepResult step = env.step(a);
    total += step.reward;
    TransitionRecord rec{s, a, step.reward, step.observation, step.done, {}};
    s = std::move(step.observation);
    buffer_.add(std::move(rec));
  }
  ++episodes_;
  if (episodes_ % config_.target_period == 0) sync_targets();
  return total;
}

}  // namespace pinslab
