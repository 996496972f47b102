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

#ifndef PINSLAB_WTD_HPP_
#define PINSLAB_WTD_HPP_

#include <optional>
#include <span>
#include <vector>

#include "pinslab/mdp.hpp"
#include "pinslab/rng.hpp"

namespace pinslab {

struct TabularShape {
  int horizon = 1;
  int num_states = 1;
  int num_actions = 1;

  size_t entries() const {
    return static_cast<size_t>(horizon) * num_states * num_actions;
  }
  bool operator==(const TabularShape&) const = default;
};

// Reward-perturbation scale sigma, prior N(theta_bar, sigma0^2) and the
// implied prior weight beta = sigma^2 / sigma0^2.
struct WtdParams {
  double sigma = 1.0;
  double sigma0 = 1.0;
  double theta_bar = 0.0;

  double beta() const { return (sigma * sigma) / (sigma0 * sigma0); }
  // sigma^2 = 3 H^2, theta_bar = H, sigma0 = sigma / sqrt(beta).
  static WtdParams regret_preset(int horizon, double beta);
  bool is_regret_preset(int horizon, double tolerance = 1e-9) const;
  void validate() const;
};

// Q_Z(h, x, a) = nu(h, x, a) + m(h, x, a) Z with level h = H fixed at zero.
class IndexedGaussianQ {
 public:
  explicit IndexedGaussianQ(TabularShape shape);

  const TabularShape& shape() const { return shape_; }
  double nu(int h, int x, int a) const { return nu_[index(h, x, a)]; }
  double m(int h, int x, int a) const { return m_[index(h, x, a)]; }
  double& nu(int h, int x, int a) { return nu_[index(h, x, a)]; }
  double& m(int h, int x, int a) { return m_[index(h, x, a)]; }
  double sampled(int h, int x, int a, double z) const { return nu(h, x, a) + m(h, x, a) * z; }

 private:
  size_t index(int h, int x, int a) const {
    return (static_cast<size_t>(h) * shape_.num_states + x) * shape_.num_actions + a;
  }
  TabularShape shape_;
  std::vector<double> nu_;
  std::vector<double> m_;
};

// One standard-normal index per (h, x, a), drawn fresh every episode.
class IndexTable {
 public:
  explicit IndexTable(TabularShape shape, double fill = 0.0);
  static IndexTable sample(TabularShape shape, RngStream& rng);

  const TabularShape& shape() const { return shape_; }
  double operator()(int h, int x, int a) const { return z_[index(h, x, a)]; }
  double& operator()(int h, int x, int a) { return z_[index(h, x, a)]; }

 private:
  size_t index(int h, int x, int a) const {
    return (static_cast<size_t>(h) * shape_.num_states + x) * shape_.num_actions + a;
  }
  TabularShape shape_;
  std::vector<double> z_;
};

struct OutcomeCount {
  double r = 0.0;
  int x_next = 0;
  long count = 0;
};

// Infinite buffer of observed outcomes, stored as distinct (r, x') with
// multiplicities. count(h, x, a) equals the number of stored outcomes.
class OutcomeDataset {
 public:
  explicit OutcomeDataset(TabularShape shape);

  const TabularShape& shape() const { return shape_; }
  void add(int h, int x, int a, const Outcome& o);
  long count(int h, int x, int a) const { return counts_[index(h, x, a)]; }
  std::span<const OutcomeCount> outcomes(int h, int x, int a) const { return cells_[index(h, x, a)]; }
  long total() const { return total_; }

 private:
  size_t index(int h, int x, int a) const {
    return (static_cast<size_t>(h) * shape_.num_states + x) * shape_.num_actions + a;
  }
  TabularShape shape_;
  std::vector<std::vector<OutcomeCount>> cells_;
  std::vector<long> counts_;
  long total_ = 0;
};

// Value table over (x, a) for a single timestep.
class ActionValueTable {
 public:
  ActionValueTable(int num_states, int num_actions, double fill = 0.0);
  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  double operator()(int x, int a) const { return v_[static_cast<size_t>(x * num_actions_ + a)]; }
  double& operator()(int x, int a) { return v_[static_cast<size_t>(x * num_actions_ + a)]; }
  double max_over_actions(int x) const;

 private:
  int num_states_;
  int num_actions_;
  std::vector<double> v_;
};

// Squared 2-Wasserstein distance between N(mu1, s1^2) and N(mu2, s2^2).
double w2_sq_gaussian(double mu1, double s1, double mu2, double s2);

// Closed-form scale update (sqrt(n) sigma + beta sigma0) / (n + beta).
double posterior_scale(long n, const WtdParams& params);

// Backward sweep h = H-1 .. 0 of the closed-form mean/scale updates; level
// h + 1 is always the freshly updated one.
IndexedGaussianQ wtd_update_pass(const OutcomeDataset& data, const WtdParams& params,
                                 const IndexTable& z);

// argmax_a nu + m z at the state; ties go to the lowest action index.
int greedy_action(const IndexedGaussianQ& q, const IndexTable& z, StateId state);

// F_{l,h} Q: closed-form mean on the induced values r + max_a' Q(x', a') plus
// the posterior scale times a fresh standard normal per (x, a).
ActionValueTable stochastic_bellman_apply(const ActionValueTable& q_next, const OutcomeDataset& data,
                                          const WtdParams& params, int h, RngStream& rng);
// Mean and standard deviation of F_{l,h} Q(x, a).
std::pair<double, double> stochastic_bellman_moments(const ActionValueTable& q_next,
                                                     const OutcomeDataset& data,
                                                     const WtdParams& params, int h, int x, int a);

// Update under one index z shared by the whole episode: the next-step action
// is argmax of the sampled value and the next-step scale m(h+1, x', a~) is
// accumulated into the scale update.
IndexedGaussianQ fixed_index_update(const OutcomeDataset& data, const WtdParams& params,
                                    double z_fixed);

// Tabular WTD agent state across episodes.
class WtdLearner {
 public:
  WtdLearner(TabularShape shape, WtdParams params);

  const TabularShape& shape() const { return shape_; }
  const WtdParams& params() const { return params_; }
  const IndexedGaussianQ& q() const { return q_; }
  const IndexTable& index_table() const { return z_; }
  const OutcomeDataset& data() const { return data_; }

  // Draws a fresh index table and recomputes (nu, m) from the buffer.
  void begin_episode(RngStream& index_rng);
  int act(StateId state) const { return greedy_action(q_, z_, state); }
  void observe(StateId state, int action, const Outcome& outcome);
  // Greedy action for every non-terminal (h, x), flattened as h * |X| + x.
  std::vector<int> greedy_policy() const;

 private:
  TabularShape shape_;
  WtdParams params_;
  OutcomeDataset data_;
  IndexedGaussianQ q_;
  IndexTable z_;
};

struct WtdRun {
  std::vector<EpisodeTranscript> transcripts;
  IndexedGaussianQ q;
};

// Runs the agent for the given number of episodes; `learner` carries the
// expected shape and any previously collected data.
WtdRun run_wtd(TabularEnv& env, WtdLearner& learner, int episodes, RngStream& index_rng);
WtdRun run_wtd(TabularEnv& env, const WtdParams& params, int episodes, RngStream& index_rng);

}  // namespace pinslab

#endif  // PINSLAB_WTD_HPP_
