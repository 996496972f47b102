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

#ifndef PINSLAB_REPLAY_HPP_
#define PINSLAB_REPLAY_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "pinslab/rng.hpp"

namespace pinslab {

struct TransitionRecord {
  Eigen::VectorXd s;
  int a = 0;
  double r = 0.0;
  Eigen::VectorXd s_next;
  bool done = false;
  std::vector<std::uint8_t> mask;
};

// Column-per-transition view of a sampled minibatch.
struct Minibatch {
  std::vector<size_t> index;
  Eigen::MatrixXd s;
  Eigen::MatrixXd s_next;
  std::vector<int> a;
  std::vector<double> r;
  std::vector<std::uint8_t> done;
  int size() const { return static_cast<int>(index.size()); }
};

std::vector<std::uint8_t> draw_mask(int length, RngStream& rng);

// Append-only transition store. With capacity > 0 the oldest records are
// evicted first; capacity 0 means unbounded.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(int mask_length, size_t capacity = 0);

  void add(TransitionRecord record);
  size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  const TransitionRecord& at(size_t i) const;
  int mask_length() const { return mask_length_; }
  size_t capacity() const { return capacity_; }
  std::uint64_t total_added() const { return total_added_; }

  // Uniform with replacement over the current contents.
  std::vector<size_t> sample_indices(int batch_size, RngStream& rng) const;
  Minibatch gather(std::span<const size_t> indices) const;

 private:
  int mask_length_;
  size_t capacity_;
  std::uint64_t total_added_ = 0;
  std::deque<TransitionRecord> records_;
};

}  // namespace pinslab

#endif  // PINSLAB_REPLAY_HPP_
