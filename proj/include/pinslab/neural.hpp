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

#ifndef PINSLAB_NEURAL_HPP_
#define PINSLAB_NEURAL_HPP_

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "pinslab/rng.hpp"

namespace pinslab {

enum class OutputActivation : std::uint8_t { kLinear = 0, kSoftplus = 1 };

// Dense feedforward layout: rectifier hidden layers over a shared trunk, then
// `heads` parallel output layers of `output` units each.
struct MlpShape {
  int input = 0;
  std::vector<int> hidden;
  int output = 0;
  int heads = 1;
  OutputActivation activation = OutputActivation::kLinear;

  // layers = [input, hidden..., output]; needs at least one hidden layer.
  static MlpShape from_layers(const std::vector<int>& layers,
                              OutputActivation activation = OutputActivation::kLinear, int heads = 1);
  int total_outputs() const { return output * heads; }
  size_t parameter_count() const;
  void validate() const;
  bool operator==(const MlpShape&) const = default;
};

// weights[k] is (fan_out x fan_in). The last entry stacks every head: rows
// [u * output, (u + 1) * output) belong to head u.
struct MlpParams {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  static MlpParams zeros(const MlpShape& shape);
  void set_zero();
  size_t size() const;
  // Largest absolute entry; handy for "did anything move" assertions.
  double max_abs() const;
};

double softplus(double x);
double sigmoid(double x);

class Mlp {
 public:
  // Symmetric uniform weights with bound sqrt(6 / (fan_in + fan_out)), zero biases.
  static Mlp init(const MlpShape& shape, RngStream& rng, bool trainable = true);
  static Mlp zeros(const MlpShape& shape, bool trainable = true);

  const MlpShape& shape() const { return shape_; }
  const MlpParams& params() const { return params_; }
  MlpParams& mutable_params() { return params_; }
  bool trainable() const { return trainable_; }
  void set_trainable(bool trainable) { trainable_ = trainable; }

  // Single input; `head` is required when the network has several heads.
  Eigen::VectorXd forward(const Eigen::VectorXd& input, std::optional<int> head = std::nullopt) const;
  // Column-per-sample batch; returns every head stacked, (heads * output) x batch.
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& inputs) const;

  void copy_parameters_from(const Mlp& other);
  std::uint64_t checksum() const;

 private:
  Mlp(MlpShape shape, MlpParams params, bool trainable)
      : shape_(std::move(shape)), params_(std::move(params)), trainable_(trainable) {}

  MlpShape shape_;
  MlpParams params_;
  bool trainable_ = true;
};

struct ForwardCache {
  std::vector<Eigen::MatrixXd> activations;  // [inputs, hidden_1, ..., hidden_k]
  Eigen::MatrixXd pre_output;
  Eigen::MatrixXd output;
};

ForwardCache forward_cached(const Mlp& net, const Eigen::MatrixXd& inputs);

// Exact gradients of the batch-averaged loss given dLoss/dOutput for every
// sample (same layout as forward_batch). Rows of heads a sample does not use
// should be zero.
MlpParams backprop(const Mlp& net, const ForwardCache& cache, const Eigen::MatrixXd& output_grads);
MlpParams backprop(const Mlp& net, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& output_grads);

struct AdamState {
  MlpParams first_moment;
  MlpParams second_moment;
  long step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_network(const MlpShape& shape, double learning_rate = 1e-3);
};

// Bias-corrected Adam; refuses frozen networks.
void adam_step(Mlp& net, const MlpParams& grads, AdamState& state);

// Flat binary checkpoint: "PNET", u32 version, u32 input, u32 hidden count,
// u32 hidden sizes, u32 output, u32 heads, u8 activation, u8 trainable, then
// every layer's row-major weights followed by its biases as little-endian
// f64. Adam sections use "PADM", u32 version, i64 step, f64 lr/beta1/beta2/eps
// and the two moment streams in the same layout.
void write_mlp(std::ostream& out, const Mlp& net);
Mlp read_mlp(std::istream& in);
void write_adam(std::ostream& out, const AdamState& state);
AdamState read_adam(std::istream& in, const MlpShape& shape);

namespace binio {
void write_u32(std::ostream& out, std::uint32_t v);
void write_u64(std::ostream& out, std::uint64_t v);
void write_f64(std::ostream& out, double v);
void write_magic(std::ostream& out, const char (&magic)[5]);
std::uint32_t read_u32(std::istream& in);
std::uint64_t read_u64(std::istream& in);
double read_f64(std::istream& in);
void expect_magic(std::istream& in, const char (&magic)[5]);
}  // namespace binio

}  // namespace pinslab

#endif  // PINSLAB_NEURAL_HPP_
