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

#include <algorithm>
#include <string>

#include "pinslab/environments.hpp"
#include "pinslab/error.hpp"

namespace pinslab {

double deep_sea_optimal_return(int size) {
  if (size < 1) fail(ErrorCode::kInvalidArgument, "deep-sea size must be >= 1");
  return 1.0 - 0.01 * static_cast<double>(size - 1) / static_cast<double>(size);
}

DeepSeaEnv::DeepSeaEnv(int size, std::uint64_t seed) : size_(size) {
  if (size < 1) {
    fail(ErrorCode::kInvalidArgument, "deep-sea size must be >= 1, got " + std::to_string(size));
  }
  RngStream rng(seed, streams::kDeepSeaMask);
  mask_.resize(static_cast<size_t>(size) * size);
  for (auto& bit : mask_) bit = rng.bernoulli(0.5) ? 1 : 0;
}

bool DeepSeaEnv::is_right(int raw_action) const {
  return raw_action != mask(row_, col_);
}

Eigen::VectorXd DeepSeaEnv::reset() {
  row_ = 0;
  col_ = 0;
  return observation();
}

Eigen::VectorXd DeepSeaEnv::observation() const {
  Eigen::VectorXd obs = Eigen::VectorXd::Zero(observation_size());
  if (!done()) obs[row_ * size_ + col_] = 1.0;
  return obs;
}

StepResult DeepSeaEnv::step(int raw_action) {
  if (done()) fail(ErrorCode::kEpisodeFinished, "deep-sea episode already finished");
  if (raw_action != 0 && raw_action != 1) {
    fail(ErrorCode::kInvalidArgument, "deep-sea action must be 0 or 1");
  }
  double reward = 0.0;
  if (is_right(raw_action)) {
    if (row_ == col_) {
      reward = (row_ == size_ - 1) ? 1.0 : -0.01 / static_cast<double>(size_);
    }
    ++col_;
  } else {
    col_ = std::max(col_ - 1, 0);
  }
  ++row_;
  return {observation(), reward, done()};
}

StateId DeepSeaTabularEnv::reset() {
  env_.reset();
  return {0, 0};
}

Outcome DeepSeaTabularEnv::step(int action) {
  const StepResult result = env_.step(action);
  return {result.reward, std::min(env_.col(), env_.size() - 1)};
}

}  // namespace pinslab
