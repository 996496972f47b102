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

#include "pinslab/wtd.hpp"

#include <cmath>
#include <string>

#include "pinslab/error.hpp"

namespace pinslab {

WtdParams WtdParams::regret_preset(int horizon, double beta) {
  if (horizon < 1) fail(ErrorCode::kInvalidArgument, "horizon must be >= 1");
  if (!(beta > 0.0)) fail(ErrorCode::kInvalidArgument, "beta must be positive");
  WtdParams p;
  p.sigma = std::sqrt(3.0) * horizon;
  p.sigma0 = p.sigma / std::sqrt(beta);
  p.theta_bar = horizon;
  return p;
}

bool WtdParams::is_regret_preset(int horizon, double tolerance) const {
  const double h = horizon;
  const double sigma_sq = sigma * sigma;
  return std::abs(sigma_sq - 3.0 * h * h) <= tolerance * (3.0 * h * h) &&
         std::abs(theta_bar - h) <= tolerance * h;
}

void WtdParams::validate() const {
  if (!(sigma > 0.0) || !(sigma0 > 0.0) || !std::isfinite(theta_bar)) {
    fail(ErrorCode::kInvalidArgument, "WTD parameters need sigma > 0, sigma0 > 0, finite theta_bar");
  }
}

IndexedGaussianQ::IndexedGaussianQ(TabularShape shape)
    : shape_(shape),
      nu_(static_cast<size_t>(shape.horizon + 1) * shape.num_states * shape.num_actions, 0.0),
      m_(nu_.size(), 0.0) {}

IndexTable::IndexTable(TabularShape shape, double fill) : shape_(shape), z_(shape.entries(), fill) {}

IndexTable IndexTable::sample(TabularShape shape, RngStream& rng) {
  IndexTable t(shape);
  for (auto& z : t.z_) z = rng.normal();
  return t;
}

OutcomeDataset::OutcomeDataset(TabularShape shape)
    : shape_(shape), cells_(shape.entries()), counts_(shape.entries(), 0) {}

void OutcomeDataset::add(int h, int x, int a, const Outcome& o) {
  if (h < 0 || h >= shape_.horizon || x < 0 || x >= shape_.num_states || a < 0 ||
      a >= shape_.num_actions || o.x_next < 0 || o.x_next >= shape_.num_states) {
    fail(ErrorCode::kShape, "outcome does not fit the dataset shape");
  }
  const size_t i = index(h, x, a);
  auto& cell = cells_[i];
  bool merged = false;
  for (auto& entry : cell) {
    if (entry.r == o.r && entry.x_next == o.x_next) {
      ++entry.count;
      merged = true;
      break;
    }
  }
  if (!merged) cell.push_back({o.r, o.x_next, 1});
  ++counts_[i];
  ++total_;
}

ActionValueTable::ActionValueTable(int num_states, int num_actions, double fill)
    : num_states_(num_states),
      num_actions_(num_actions),
      v_(static_cast<size_t>(num_states) * num_actions, fill) {}

double ActionValueTable::max_over_actions(int x) const {
  double best = (*this)(x, 0);
  for (int a = 1; a < num_actions_; ++a) best = std::max(best, (*this)(x, a));
  return best;
}

double w2_sq_gaussian(double mu1, double s1, double mu2, double s2) {
  if (s1 < 0.0 || s2 < 0.0) fail(ErrorCode::kDomain, "Gaussian scales must be non-negative");
  const double dm = mu1 - mu2;
  const double ds = s1 - s2;
  return dm * dm + ds * ds;
}

double posterior_scale(long n, const WtdParams& params) {
  const double nd = static_cast<double>(n);
  const double beta = params.beta();
  return (std::sqrt(nd) * params.sigma + beta * params.sigma0) / (nd + beta);
}

namespace {

// Closed-form mean given the induced next-step value of each successor x'.
double posterior_mean(std::span<const OutcomeCount> outcomes, long n, const std::vector<double>& next_value,
                      const WtdParams& params) {
  const double beta = params.beta();
  double total = 0.0;
  for (const auto& o : outcomes) {
    total += static_cast<double>(o.count) * (o.r + next_value[static_cast<size_t>(o.x_next)]);
  }
  return (total + beta * params.theta_bar) / (static_cast<double>(n) + beta);
}

}  // namespace

IndexedGaussianQ wtd_update_pass(const OutcomeDataset& data, const WtdParams& params,
                                 const IndexTable& z) {
  params.validate();
  const TabularShape& s = data.shape();
  if (!(z.shape() == s)) fail(ErrorCode::kShape, "index table shape does not match dataset");
  IndexedGaussianQ q(s);
  std::vector<double> next_value(static_cast<size_t>(s.num_states), 0.0);
  for (int h = s.horizon - 1; h >= 0; --h) {
    if (h == s.horizon - 1) {
      std::fill(next_value.begin(), next_value.end(), 0.0);
    } else {
      for (int x = 0; x < s.num_states; ++x) {
        double best = q.sampled(h + 1, x, 0, z(h + 1, x, 0));
        for (int a = 1; a < s.num_actions; ++a) best = std::max(best, q.sampled(h + 1, x, a, z(h + 1, x, a)));
        next_value[static_cast<size_t>(x)] = best;
      }
    }
    for (int x = 0; x < s.num_states; ++x) {
      for (int a = 0; a < s.num_actions; ++a) {
        const long n = data.count(h, x, a);
        q.nu(h, x, a) = posterior_mean(data.outcomes(h, x, a), n, next_value, params);
        q.m(h, x, a) = posterior_scale(n, params);
      }
    }
  }
  return q;
}

int greedy_action(const IndexedGaussianQ& q, const IndexTable& z, StateId state) {
  const TabularShape& s = q.shape();
  if (state.h >= s.horizon) fail(ErrorCode::kNoAction, "terminal state has no actions");
  if (state.h < 0 || state.x < 0 || state.x >= s.num_states) fail(ErrorCode::kShape, "state out of range");
  int best_action = 0;
  double best = q.sampled(state.h, state.x, 0, z(state.h, state.x, 0));
  for (int a = 1; a < s.num_actions; ++a) {
    const double v = q.sampled(state.h, state.x, a, z(state.h, state.x, a));
    if (v > best) {
      best = v;
      best_action = a;
    }
  }
  return best_action;
}

std::pair<double, double> stochastic_bellman_moments(const ActionValueTable& q_next,
                                                     const OutcomeDataset& data,
                                                     const WtdParams& params, int h, int x, int a) {
  params.validate();
  std::vector<double> induced(static_cast<size_t>(q_next.num_states()));
  for (int xn = 0; xn < q_next.num_states(); ++xn) induced[static_cast<size_t>(xn)] = q_next.max_over_actions(xn);
  const long n = data.count(h, x, a);
  return {posterior_mean(data.outcomes(h, x, a), n, induced, params), posterior_scale(n, params)};
}

ActionValueTable stochastic_bellman_apply(const ActionValueTable& q_next, const OutcomeDataset& data,
                                          const WtdParams& params, int h, RngStream& rng) {
  params.validate();
  const TabularShape& s = data.shape();
  if (q_next.num_states() != s.num_states || q_next.num_actions() != s.num_actions) {
    fail(ErrorCode::kShape, "value table shape does not match dataset");
  }
  if (h < 0 || h >= s.horizon) fail(ErrorCode::kShape, "timestep out of range");
  std::vector<double> induced(static_cast<size_t>(s.num_states));
  for (int x = 0; x < s.num_states; ++x) induced[static_cast<size_t>(x)] = q_next.max_over_actions(x);
  ActionValueTable out(s.num_states, s.num_actions);
  for (int x = 0; x < s.num_states; ++x) {
    for (int a = 0; a < s.num_actions; ++a) {
      const long n = data.count(h, x, a);
      out(x, a) = posterior_mean(data.outcomes(h, x, a), n, induced, params) +
                  posterior_scale(n, params) * rng.normal();
    }
  }
  return out;
}

IndexedGaussianQ fixed_index_update(const OutcomeDataset& data, const WtdParams& params, double z_fixed) {
  params.validate();
  const TabularShape& s = data.shape();
  const double beta = params.beta();
  IndexedGaussianQ q(s);
  std::vector<int> next_action(static_cast<size_t>(s.num_states), 0);
  for (int h = s.horizon - 1; h >= 0; --h) {
    const bool last = (h == s.horizon - 1);
    if (!last) {
      for (int x = 0; x < s.num_states; ++x) {
        int best_a = 0;
        double best = q.sampled(h + 1, x, 0, z_fixed);
        for (int a = 1; a < s.num_actions; ++a) {
          const double v = q.sampled(h + 1, x, a, z_fixed);
          if (v > best) {
            best = v;
            best_a = a;
          }
        }
        next_action[static_cast<size_t>(x)] = best_a;
      }
    }
    for (int x = 0; x < s.num_states; ++x) {
      for (int a = 0; a < s.num_actions; ++a) {
        const long n = data.count(h, x, a);
        double mean_total = 0.0;
        double scale_total = 0.0;
        for (const auto& o : data.outcomes(h, x, a)) {
          const double c = static_cast<double>(o.count);
          if (last) {
            mean_total += c * o.r;
          } else {
            const int an = next_action[static_cast<size_t>(o.x_next)];
            mean_total += c * (o.r + q.nu(h + 1, o.x_next, an));
            scale_total += c * q.m(h + 1, o.x_next, an);
          }
        }
        const double denom = static_cast<double>(n) + beta;
        q.nu(h, x, a) = (mean_total + beta * params.theta_bar) / denom;
        q.m(h, x, a) =
            (std::sqrt(static_cast<double>(n)) * params.sigma + beta * params.sigma0 + scale_total) / denom;
      }
    }
  }
  return q;
}

WtdLearner::WtdLearner(TabularShape shape, WtdParams params)
    : shape_(shape), params_(params), data_(shape), q_(shape), z_(shape) {
  params_.validate();
  if (shape.horizon < 1 || shape.num_states < 1 || shape.num_actions < 1) {
    fail(ErrorCode::kConfig, "tabular shape needs H, |X|, |A| >= 1");
  }
  // Prior-only tables until the first episode starts.
  q_ = wtd_update_pass(data_, params_, z_);
}

void WtdLearner::begin_episode(RngStream& index_rng) {
  z_ = IndexTable::sample(shape_, index_rng);
  q_ = wtd_update_pass(data_, params_, z_);
}

void WtdLearner::observe(StateId state, int action, const Outcome& outcome) {
  data_.add(state.h, state.x, action, outcome);
}

std::vector<int> WtdLearner::greedy_policy() const {
  std::vector<int> policy(static_cast<size_t>(shape_.horizon) * shape_.num_states);
  for (int h = 0; h < shape_.horizon; ++h) {
    for (int x = 0; x < shape_.num_states; ++x) {
      policy[static_cast<size_t>(h * shape_.num_states + x)] = act({h, x});
    }
  }
  return policy;
}

WtdRun run_wtd(TabularEnv& env, WtdLearner& learner, int episodes, RngStream& index_rng) {
  const TabularShape env_shape{env.horizon(), env.num_states(), env.num_actions()};
  if (!(env_shape == learner.shape())) {
    fail(ErrorCode::kConfig, "environment shape (H=" + std::to_string(env_shape.horizon) +
                                 ", X=" + std::to_string(env_shape.num_states) +
                                 ", A=" + std::to_string(env_shape.num_actions) +
                                 ") does not match the agent");
  }
  if (episodes < 0) fail(ErrorCode::kInvalidArgument, "episode count must be non-negative");
  WtdRun run{{}, learner.q()};
  run.transcripts.reserve(static_cast<size_t>(episodes));
  for (int l = 1; l <= episodes; ++l) {
    learner.begin_episode(index_rng);
    EpisodeTranscript t;
    t.episode = l;
    StateId state = env.reset();
    for (int h = 0; h < env_shape.horizon; ++h) {
      state.h = h;
      const int a = learner.act(state);
      const Outcome o = env.step(a);
      learner.observe(state, a, o);
      const bool done = (h == env_shape.horizon - 1);
      const StateId next{h + 1, o.x_next};
      t.steps.push_back({state, a, o.r, next, done});
      state = next;
    }
    run.transcripts.push_back(std::move(t));
  }
  run.q = learner.q();
  return run;
}

WtdRun run_wtd(TabularEnv& env, const WtdParams& params, int episodes, RngStream& index_rng) {
  WtdLearner learner({env.horizon(), env.num_states(), env.num_actions()}, params);
  return run_wtd(env, learner, episodes, index_rng);
}

}  // namespace pinslab
