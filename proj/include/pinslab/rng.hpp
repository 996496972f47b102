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

#ifndef PINSLAB_RNG_HPP_
#define PINSLAB_RNG_HPP_

#include <cstdint>
#include <limits>
#include <random>

namespace pinslab {

// Stream ids for the randomness roles. Each role draws from its own stream so
// that extra draws in one place never shift another role's sequence.
namespace streams {
inline constexpr std::uint64_t kEnvironment = 0x01;
inline constexpr std::uint64_t kDeepSeaMask = 0x02;
inline constexpr std::uint64_t kNetworkInit = 0x10;
inline constexpr std::uint64_t kIndexSampling = 0x11;
inline constexpr std::uint64_t kMaskSampling = 0x12;
inline constexpr std::uint64_t kMinibatch = 0x13;
inline constexpr std::uint64_t kExploration = 0x14;
inline constexpr std::uint64_t kMdpSampling = 0x20;
inline constexpr std::uint64_t kOptimism = 0x30;
}  // namespace streams

// A 64-bit Mersenne Twister keyed by (seed, stream_id) through splitmix64.
// Identical keys reproduce bit-identical sequences; the engine call counter
// is exposed so tests can assert that a role consumed nothing.
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }
  result_type operator()() {
    ++counter_;
    return engine_();
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }
  std::uint64_t counter() const { return counter_; }

  // Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  double gamma(double shape);
  bool bernoulli(double p) { return uniform() < p; }
  // Uniform on {0, ..., n - 1}; n must be positive.
  int uniform_int(int n);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t counter_ = 0;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

inline RngStream seeded_rng(std::uint64_t seed, std::uint64_t stream_id) {
  return RngStream(seed, stream_id);
}

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace pinslab

#endif  // PINSLAB_RNG_HPP_
