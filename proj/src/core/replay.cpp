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

#include "pinslab/replay.hpp"

#include <string>

#include "pinslab/error.hpp"

namespace pinslab {

std::vector<std::uint8_t> draw_mask(int length, RngStream& rng) {
  std::vector<std::uint8_t> mask(static_cast<size_t>(length));
  for (auto& bit : mask) bit = rng.bernoulli(0.5) ? 1 : 0;
  return mask;
}

ReplayBuffer::ReplayBuffer(int mask_length, size_t capacity) : mask_length_(mask_length), capacity_(capacity) {
  if (mask_length < 0) fail(ErrorCode::kInvalidArgument, "mask length must be >= 0");
}

void ReplayBuffer::add(TransitionRecord record) {
  if (static_cast<int>(record.mask.size()) != mask_length_) {
    fail(ErrorCode::kShape, "transition mask has length " + std::to_string(record.mask.size()) + ", buffer expects " +
                                std::to_string(mask_length_));
  }
  if (!records_.empty() &&
      (record.s.size() != records_.front().s.size() || record.s_next.size() != records_.front().s.size())) {
    fail(ErrorCode::kShape, "transition observation size differs from buffer contents");
  }
  records_.push_back(std::move(record));
  ++total_added_;
  if (capacity_ > 0 && records_.size() > capacity_) records_.pop_front();
}

const TransitionRecord& ReplayBuffer::at(size_t i) const {
  if (i >= records_.size()) fail(ErrorCode::kIndex, "replay index out of range");
  return records_[i];
}

std::vector<size_t> ReplayBuffer::sample_indices(int batch_size, RngStream& rng) const {
  if (records_.empty()) fail(ErrorCode::kPrecondition, "cannot sample from an empty replay buffer");
  if (batch_size < 1) fail(ErrorCode::kInvalidArgument, "batch size must be >= 1");
  std::vector<size_t> idx(static_cast<size_t>(batch_size));
  const auto n = static_cast<std::uint64_t>(records_.size());
  for (auto& i : idx) {
    i = static_cast<size_t>(rng() % n);
  }
  return idx;
}

Minibatch ReplayBuffer::gather(std::span<const size_t> indices) const {
  Minibatch b;
  if (indices.empty()) return b;
  const Eigen::Index dim = at(indices[0]).s.size();
  const Eigen::Index n = static_cast<Eigen::Index>(indices.size());
  b.index.assign(indices.begin(), indices.end());
  b.s.resize(dim, n);
  b.s_next.resize(dim, n);
  b.a.resize(indices.size());
  b.r.resize(indices.size());
  b.done.resize(indices.size());
  for (Eigen::Index j = 0; j < n; ++j) {
    const TransitionRecord& t = at(indices[static_cast<size_t>(j)]);
    b.s.col(j) = t.s;
    b.s_next.col(j) = t.s_next;
    b.a[static_cast<size_t>(j)] = t.a;
    b.r[static_cast<size_t>(j)] = t.r;
    b.done[static_cast<size_t>(j)] = t.done ? 1 : 0;
  }
  return b;
}

}  // namespace pinslab
