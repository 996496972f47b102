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

#include "pinslab/neural.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "pinslab/error.hpp"

namespace pinslab {

MlpShape MlpShape::from_layers(const std::vector<int>& layers, OutputActivation activation, int heads) {
  if (layers.size() < 3) {
    fail(ErrorCode::kConfig, "network needs [input, hidden..., output] with at least one hidden layer");
  }
  MlpShape s;
  s.input = layers.front();
  s.hidden.assign(layers.begin() + 1, layers.end() - 1);
  s.output = layers.back();
  s.heads = heads;
  s.activation = activation;
  s.validate();
  return s;
}

void MlpShape::validate() const {
  if (hidden.empty()) fail(ErrorCode::kConfig, "network needs at least one hidden layer");
  if (input < 1 || output < 1 || heads < 1) fail(ErrorCode::kConfig, "layer sizes and head count must be >= 1");
  for (int h : hidden) {
    if (h < 1) fail(ErrorCode::kConfig, "hidden layer sizes must be >= 1");
  }
}

size_t MlpShape::parameter_count() const {
  size_t count = 0;
  int fan_in = input;
  for (int h : hidden) {
    count += static_cast<size_t>(fan_in) * h + h;
    fan_in = h;
  }
  return count + static_cast<size_t>(fan_in) * total_outputs() + total_outputs();
}

MlpParams MlpParams::zeros(const MlpShape& shape) {
  MlpParams p;
  int fan_in = shape.input;
  for (int h : shape.hidden) {
    p.weights.push_back(Eigen::MatrixXd::Zero(h, fan_in));
    p.biases.push_back(Eigen::VectorXd::Zero(h));
    fan_in = h;
  }
  p.weights.push_back(Eigen::MatrixXd::Zero(shape.total_outputs(), fan_in));
  p.biases.push_back(Eigen::VectorXd::Zero(shape.total_outputs()));
  return p;
}

void MlpParams::set_zero() {
  for (auto& w : weights) w.setZero();
  for (auto& b : biases) b.setZero();
}

size_t MlpParams::size() const {
  size_t n = 0;
  for (const auto& w : weights) n += static_cast<size_t>(w.size());
  for (const auto& b : biases) n += static_cast<size_t>(b.size());
  return n;
}

double MlpParams::max_abs() const {
  double m = 0.0;
  for (const auto& w : weights) {
    if (w.size() > 0) m = std::max(m, w.cwiseAbs().maxCoeff());
  }
  for (const auto& b : biases) {
    if (b.size() > 0) m = std::max(m, b.cwiseAbs().maxCoeff());
  }
  return m;
}

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Mlp Mlp::zeros(const MlpShape& shape, bool trainable) {
  shape.validate();
  return Mlp(shape, MlpParams::zeros(shape), trainable);
}

Mlp Mlp::init(const MlpShape& shape, RngStream& rng, bool trainable) {
  Mlp net = zeros(shape, trainable);
  auto fill = [&rng](Eigen::MatrixXd& w, int fan_in, int fan_out, Eigen::Index row0, Eigen::Index rows) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (Eigen::Index r = row0; r < row0 + rows; ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = rng.uniform(-bound, bound);
    }
  };
  const size_t n_hidden = shape.hidden.size();
  int fan_in = shape.input;
  for (size_t k = 0; k < n_hidden; ++k) {
    fill(net.params_.weights[k], fan_in, shape.hidden[k], 0, shape.hidden[k]);
    fan_in = shape.hidden[k];
  }
  for (int u = 0; u < shape.heads; ++u) {
    fill(net.params_.weights[n_hidden], fan_in, shape.output, static_cast<Eigen::Index>(u) * shape.output,
         shape.output);
  }
  return net;
}

namespace {

void apply_output(OutputActivation activation, const Eigen::MatrixXd& pre, Eigen::MatrixXd& out) {
  if (activation == OutputActivation::kLinear) {
    out = pre;
  } else {
    out = pre.unaryExpr([](double v) { return softplus(v); });
  }
}

}  // namespace

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& input, std::optional<int> head) const {
  if (input.size() != shape_.input) {
    fail(ErrorCode::kShape, "input has " + std::to_string(input.size()) + " entries, network expects " +
                                std::to_string(shape_.input));
  }
  int u = 0;
  if (head.has_value()) {
    u = *head;
    if (u < 0 || u >= shape_.heads) fail(ErrorCode::kIndex, "head index out of range");
  } else if (shape_.heads > 1) {
    fail(ErrorCode::kShape, "multi-head network needs a head index");
  }
  const size_t n_hidden = shape_.hidden.size();
  Eigen::VectorXd a = input;
  for (size_t k = 0; k < n_hidden; ++k) {
    a = (params_.weights[k] * a + params_.biases[k]).cwiseMax(0.0);
  }
  const Eigen::Index row0 = static_cast<Eigen::Index>(u) * shape_.output;
  Eigen::VectorXd pre = params_.weights[n_hidden].middleRows(row0, shape_.output) * a +
                        params_.biases[n_hidden].segment(row0, shape_.output);
  if (shape_.activation == OutputActivation::kSoftplus) {
    for (Eigen::Index i = 0; i < pre.size(); ++i) pre[i] = softplus(pre[i]);
  }
  return pre;
}

ForwardCache forward_cached(const Mlp& net, const Eigen::MatrixXd& inputs) {
  const MlpShape& s = net.shape();
  if (inputs.rows() != s.input) {
    fail(ErrorCode::kShape, "batch rows " + std::to_string(inputs.rows()) + " do not match network input " +
                                std::to_string(s.input));
  }
  const MlpParams& p = net.params();
  const size_t n_hidden = s.hidden.size();
  ForwardCache cache;
  cache.activations.reserve(n_hidden + 1);
  cache.activations.push_back(inputs);
  for (size_t k = 0; k < n_hidden; ++k) {
    Eigen::MatrixXd z = p.weights[k] * cache.activations.back();
    z.colwise() += p.biases[k];
    cache.activations.push_back(z.cwiseMax(0.0));
  }
  cache.pre_output = p.weights[n_hidden] * cache.activations.back();
  cache.pre_output.colwise() += p.biases[n_hidden];
  apply_output(s.activation, cache.pre_output, cache.output);
  return cache;
}

Eigen::MatrixXd Mlp::forward_batch(const Eigen::MatrixXd& inputs) const {
  return forward_cached(*this, inputs).output;
}

MlpParams backprop(const Mlp& net, const ForwardCache& cache, const Eigen::MatrixXd& output_grads) {
  const MlpShape& s = net.shape();
  const Eigen::Index batch = cache.activations.front().cols();
  if (batch == 0) fail(ErrorCode::kInvalidArgument, "backprop needs a non-empty batch");
  if (output_grads.rows() != s.total_outputs() || output_grads.cols() != batch) {
    fail(ErrorCode::kShape, "output gradient shape does not match the forward batch");
  }
  const MlpParams& p = net.params();
  const size_t n_hidden = s.hidden.size();
  const double inv_batch = 1.0 / static_cast<double>(batch);
  MlpParams g;
  g.weights.resize(n_hidden + 1);
  g.biases.resize(n_hidden + 1);

  Eigen::MatrixXd delta = output_grads;
  if (s.activation == OutputActivation::kSoftplus) {
    delta.array() *= cache.pre_output.unaryExpr([](double v) { return sigmoid(v); }).array();
  }
  for (size_t k = n_hidden + 1; k-- > 0;) {
    const Eigen::MatrixXd& a_in = cache.activations[k];
    g.weights[k].noalias() = (delta * a_in.transpose()) * inv_batch;
    g.biases[k] = delta.rowwise().sum() * inv_batch;
    if (k == 0) break;
    Eigen::MatrixXd back = p.weights[k].transpose() * delta;
    delta = (a_in.array() > 0.0).select(back, 0.0);
  }
  return g;
}

MlpParams backprop(const Mlp& net, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& output_grads) {
  return backprop(net, forward_cached(net, inputs), output_grads);
}

void Mlp::copy_parameters_from(const Mlp& other) {
  if (!(other.shape_ == shape_)) fail(ErrorCode::kShape, "cannot copy parameters between different shapes");
  params_ = other.params_;
}

std::uint64_t Mlp::checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](double v) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  };
  for (size_t k = 0; k < params_.weights.size(); ++k) {
    const auto& w = params_.weights[k];
    for (Eigen::Index i = 0; i < w.size(); ++i) mix(w.data()[i]);
    const auto& b = params_.biases[k];
    for (Eigen::Index i = 0; i < b.size(); ++i) mix(b[i]);
  }
  return h;
}

AdamState AdamState::for_network(const MlpShape& shape, double learning_rate) {
  AdamState st;
  st.first_moment = MlpParams::zeros(shape);
  st.second_moment = MlpParams::zeros(shape);
  st.learning_rate = learning_rate;
  return st;
}

void adam_step(Mlp& net, const MlpParams& grads, AdamState& state) {
  if (!net.trainable()) fail(ErrorCode::kFrozenParameter, "refusing to update a frozen network");
  MlpParams& p = net.mutable_params();
  if (grads.weights.size() != p.weights.size() || state.first_moment.weights.size() != p.weights.size()) {
    fail(ErrorCode::kShape, "gradient / optimizer layout does not match the network");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  const double b1 = state.beta1, b2 = state.beta2, lr = state.learning_rate, eps = state.epsilon;
  auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
    if (g.rows() != param.rows() || g.cols() != param.cols()) {
      fail(ErrorCode::kShape, "gradient shape does not match parameter shape");
    }
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.cwiseProduct(g);
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (size_t k = 0; k < p.weights.size(); ++k) {
    update(p.weights[k], grads.weights[k], state.first_moment.weights[k], state.second_moment.weights[k]);
    update(p.biases[k], grads.biases[k], state.first_moment.biases[k], state.second_moment.biases[k]);
  }
}

namespace binio {

void write_u32(std::ostream& out, std::uint32_t v) {
  char bytes[4];
  for (int i = 0; i < 4; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xffU);
  out.write(bytes, 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xffU);
  out.write(bytes, 8);
}

void write_f64(std::ostream& out, double v) { write_u64(out, std::bit_cast<std::uint64_t>(v)); }

void write_magic(std::ostream& out, const char (&magic)[5]) { out.write(magic, 4); }

namespace {
void read_bytes(std::istream& in, unsigned char* dst, int n) {
  in.read(reinterpret_cast<char*>(dst), n);
  if (!in) fail(ErrorCode::kFormat, "checkpoint truncated");
}
}  // namespace

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  read_bytes(in, b, 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  read_bytes(in, b, 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

double read_f64(std::istream& in) { return std::bit_cast<double>(read_u64(in)); }

void expect_magic(std::istream& in, const char (&magic)[5]) {
  char got[4];
  in.read(got, 4);
  if (!in || !std::equal(got, got + 4, magic)) {
    fail(ErrorCode::kFormat, std::string("checkpoint section does not start with ") + magic);
  }
}

}  // namespace binio

namespace {

constexpr std::uint32_t kFormatVersion = 1;

void write_tensors(std::ostream& out, const MlpParams& p) {
  for (size_t k = 0; k < p.weights.size(); ++k) {
    const auto& w = p.weights[k];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) binio::write_f64(out, w(r, c));
    }
    for (Eigen::Index i = 0; i < p.biases[k].size(); ++i) binio::write_f64(out, p.biases[k][i]);
  }
}

void read_tensors(std::istream& in, MlpParams& p) {
  for (size_t k = 0; k < p.weights.size(); ++k) {
    auto& w = p.weights[k];
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = binio::read_f64(in);
    }
    for (Eigen::Index i = 0; i < p.biases[k].size(); ++i) p.biases[k][i] = binio::read_f64(in);
  }
}

}  // namespace

void write_mlp(std::ostream& out, const Mlp& net) {
  const MlpShape& s = net.shape();
  binio::write_magic(out, "PNET");
  binio::write_u32(out, kFormatVersion);
  binio::write_u32(out, static_cast<std::uint32_t>(s.input));
  binio::write_u32(out, static_cast<std::uint32_t>(s.hidden.size()));
  for (int h : s.hidden) binio::write_u32(out, static_cast<std::uint32_t>(h));
  binio::write_u32(out, static_cast<std::uint32_t>(s.output));
  binio::write_u32(out, static_cast<std::uint32_t>(s.heads));
  const char tags[2] = {static_cast<char>(s.activation), static_cast<char>(net.trainable() ? 1 : 0)};
  out.write(tags, 2);
  write_tensors(out, net.params());
  if (!out) fail(ErrorCode::kIo, "failed writing network checkpoint");
}

Mlp read_mlp(std::istream& in) {
  binio::expect_magic(in, "PNET");
  if (binio::read_u32(in) != kFormatVersion) fail(ErrorCode::kFormat, "unsupported network format version");
  MlpShape s;
  s.input = static_cast<int>(binio::read_u32(in));
  const std::uint32_t n_hidden = binio::read_u32(in);
  if (n_hidden > 1024) fail(ErrorCode::kFormat, "implausible hidden layer count");
  for (std::uint32_t i = 0; i < n_hidden; ++i) s.hidden.push_back(static_cast<int>(binio::read_u32(in)));
  s.output = static_cast<int>(binio::read_u32(in));
  s.heads = static_cast<int>(binio::read_u32(in));
  unsigned char tags[2];
  in.read(reinterpret_cast<char*>(tags), 2);
  if (!in) fail(ErrorCode::kFormat, "checkpoint truncated");
  if (tags[0] > 1) fail(ErrorCode::kFormat, "unknown output activation tag");
  s.activation = static_cast<OutputActivation>(tags[0]);
  try {
    s.validate();
  } catch (const Error& e) {
    fail(ErrorCode::kFormat, std::string("bad network header: ") + e.what());
  }
  Mlp net = Mlp::zeros(s, tags[1] != 0);
  read_tensors(in, net.mutable_params());
  return net;
}

void write_adam(std::ostream& out, const AdamState& st) {
  binio::write_magic(out, "PADM");
  binio::write_u32(out, kFormatVersion);
  binio::write_u64(out, static_cast<std::uint64_t>(st.step));
  binio::write_f64(out, st.learning_rate);
  binio::write_f64(out, st.beta1);
  binio::write_f64(out, st.beta2);
  binio::write_f64(out, st.epsilon);
  write_tensors(out, st.first_moment);
  write_tensors(out, st.second_moment);
  if (!out) fail(ErrorCode::kIo, "failed writing optimizer checkpoint");
}

AdamState read_adam(std::istream& in, const MlpShape& shape) {
  binio::expect_magic(in, "PADM");
  if (binio::read_u32(in) != kFormatVersion) fail(ErrorCode::kFormat, "unsupported optimizer format version");
  AdamState st = AdamState::for_network(shape);
  st.step = static_cast<long>(binio::read_u64(in));
  st.learning_rate = binio::read_f64(in);
  st.beta1 = binio::read_f64(in);
  st.beta2 = binio::read_f64(in);
  st.epsilon = binio::read_f64(in);
  read_tensors(in, st.first_moment);
  read_tensors(in, st.second_moment);
  return st;
}

}  // namespace pinslab
