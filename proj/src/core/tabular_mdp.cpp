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
#include <cmath>
#include <limits>
#include <string>

#include "pinslab/environments.hpp"
#include "pinslab/error.hpp"

namespace pinslab {

namespace {

void check_shape(int horizon, int num_states, int num_actions) {
  if (horizon < 1 || num_states < 1 || num_actions < 1) {
    fail(ErrorCode::kInvalidArgument, "tabular shape needs H, |X|, |A| >= 1");
  }
}

}  // namespace

TabularMDP::TabularMDP(int horizon, int num_states, int num_actions, int initial_state)
    : horizon_(horizon),
      num_states_(num_states),
      num_actions_(num_actions),
      initial_state_(initial_state) {
  check_shape(horizon, num_states, num_actions);
  if (initial_state < 0 || initial_state >= num_states) {
    fail(ErrorCode::kInvalidArgument, "initial state out of range");
  }
  probs_.assign(static_cast<size_t>(horizon) * num_states * num_actions * num_outcomes(), 0.0);
}

int TabularMDP::outcome_index(const Outcome& o) const {
  if (o.r != 0.0 && o.r != 1.0) fail(ErrorCode::kDomain, "tabular rewards must be binary");
  if (o.x_next < 0 || o.x_next >= num_states_) fail(ErrorCode::kDomain, "next state out of range");
  return static_cast<int>(o.r) * num_states_ + o.x_next;
}

Outcome TabularMDP::sample(int h, int x, int a, RngStream& rng) const {
  const double* p = distribution(h, x, a);
  const double u = rng.uniform();
  double acc = 0.0;
  const int n = num_outcomes();
  int last_positive = 0;
  for (int o = 0; o < n; ++o) {
    if (p[o] > 0.0) last_positive = o;
    acc += p[o];
    if (u < acc) return outcome(o);
  }
  // Rounding left u above the accumulated mass; fall back to the last support point.
  return outcome(last_positive);
}

void TabularMDP::validate() const {
  for (int h = 0; h < horizon_; ++h) {
    for (int x = 0; x < num_states_; ++x) {
      for (int a = 0; a < num_actions_; ++a) {
        const double* p = distribution(h, x, a);
        double total = 0.0;
        for (int o = 0; o < num_outcomes(); ++o) {
          if (!(p[o] >= 0.0)) fail(ErrorCode::kDomain, "negative outcome probability");
          total += p[o];
        }
        if (std::abs(total - 1.0) > 1e-9) {
          fail(ErrorCode::kDomain, "outcome distribution does not sum to one");
        }
      }
    }
  }
}

DirichletPrior DirichletPrior::uniform(int horizon, int num_states, int num_actions, double beta) {
  check_shape(horizon, num_states, num_actions);
  const size_t n = static_cast<size_t>(horizon) * num_states * num_actions * 2 * num_states;
  return DirichletPrior(horizon, num_states, num_actions,
                        std::vector<double>(n, beta / (2.0 * num_states)));
}

DirichletPrior DirichletPrior::random(int horizon, int num_states, int num_actions, double beta,
                                      RngStream& rng) {
  check_shape(horizon, num_states, num_actions);
  const int k = 2 * num_states;
  std::vector<double> alpha;
  alpha.reserve(static_cast<size_t>(horizon) * num_states * num_actions * k);
  for (int i = 0; i < horizon * num_states * num_actions; ++i) {
    std::vector<double> block(static_cast<size_t>(k));
    double total = 0.0;
    for (auto& v : block) {
      v = 0.05 + rng.uniform();
      total += v;
    }
    for (double v : block) alpha.push_back(v * beta / total);
  }
  return DirichletPrior(horizon, num_states, num_actions, std::move(alpha));
}

DirichletPrior::DirichletPrior(int horizon, int num_states, int num_actions,
                               std::vector<double> alpha)
    : horizon_(horizon), num_states_(num_states), num_actions_(num_actions), alpha_(std::move(alpha)) {
  check_shape(horizon, num_states, num_actions);
  const int k = num_outcomes();
  if (alpha_.size() != static_cast<size_t>(horizon) * num_states * num_actions * k) {
    fail(ErrorCode::kShape, "alpha size does not match H * |X| * |A| * 2|X|");
  }
  for (double v : alpha_) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      fail(ErrorCode::kInvalidArgument, "invalid prior: every alpha entry must be positive");
    }
  }
  for (size_t block = 0; block < alpha_.size() / k; ++block) {
    double total = 0.0;
    for (int o = 0; o < k; ++o) total += alpha_[block * k + o];
    if (block == 0) {
      beta_ = total;
    } else if (std::abs(total - beta_) > 1e-9 * beta_) {
      fail(ErrorCode::kInvalidArgument, "invalid prior: alpha vectors must share the same total");
    }
  }
  if (beta_ < 3.0 - 1e-12) {
    fail(ErrorCode::kInvalidArgument,
         "invalid prior: total concentration must be >= 3, got " + std::to_string(beta_));
  }
}

const double* DirichletPrior::alpha(int h, int x, int a) const {
  return &alpha_[((static_cast<size_t>(h) * num_states_ + x) * num_actions_ + a) * num_outcomes()];
}

std::vector<double> sample_dirichlet(const double* alpha, int n, RngStream& rng) {
  // log G(a) = log G(a + 1) + log(U) / a keeps small shapes representable.
  std::vector<double> log_g(static_cast<size_t>(n));
  double max_log = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    if (!(alpha[i] > 0.0)) fail(ErrorCode::kInvalidArgument, "invalid prior: alpha must be positive");
    const double g = rng.gamma(alpha[i] + 1.0);
    double u = rng.uniform();
    if (u <= 0.0) u = 0x1.0p-53;
    log_g[static_cast<size_t>(i)] = std::log(g) + std::log(u) / alpha[i];
    max_log = std::max(max_log, log_g[static_cast<size_t>(i)]);
  }
  std::vector<double> p(static_cast<size_t>(n));
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    p[static_cast<size_t>(i)] = std::exp(log_g[static_cast<size_t>(i)] - max_log);
    total += p[static_cast<size_t>(i)];
  }
  for (auto& v : p) v /= total;
  return p;
}

TabularMDP dirichlet_mdp_sample(const DirichletPrior& prior, RngStream& rng) {
  TabularMDP mdp(prior.horizon(), prior.num_states(), prior.num_actions(), 0);
  const int k = prior.num_outcomes();
  for (int h = 0; h < prior.horizon(); ++h) {
    for (int x = 0; x < prior.num_states(); ++x) {
      for (int a = 0; a < prior.num_actions(); ++a) {
        const auto p = sample_dirichlet(prior.alpha(h, x, a), k, rng);
        for (int o = 0; o < k; ++o) mdp.prob(h, x, a, o) = p[static_cast<size_t>(o)];
      }
    }
  }
  return mdp;
}

MdpEnv::MdpEnv(const TabularMDP& mdp, std::uint64_t seed)
    : mdp_(&mdp), rng_(seed, streams::kEnvironment) {}

StateId MdpEnv::reset() {
  state_ = {0, mdp_->initial_state()};
  return state_;
}

Outcome MdpEnv::step(int action) {
  if (state_.h >= mdp_->horizon()) fail(ErrorCode::kEpisodeFinished, "tabular episode already finished");
  if (action < 0 || action >= mdp_->num_actions()) fail(ErrorCode::kInvalidArgument, "action out of range");
  const Outcome o = mdp_->sample(state_.h, state_.x, action, rng_);
  state_ = {state_.h + 1, o.x_next};
  return o;
}

}  // namespace pinslab
