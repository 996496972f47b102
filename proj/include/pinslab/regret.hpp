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

#ifndef PINSLAB_REGRET_HPP_
#define PINSLAB_REGRET_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "pinslab/environments.hpp"
#include "pinslab/wtd.hpp"

namespace pinslab {

// Q* and V* over levels 0..H, with level H identically zero.
class ValueTables {
 public:
  explicit ValueTables(TabularShape shape);
  const TabularShape& shape() const { return shape_; }
  double q(int h, int x, int a) const { return q_[qi(h, x, a)]; }
  double& q(int h, int x, int a) { return q_[qi(h, x, a)]; }
  double v(int h, int x) const { return v_[static_cast<size_t>(h * shape_.num_states + x)]; }
  double& v(int h, int x) { return v_[static_cast<size_t>(h * shape_.num_states + x)]; }

 private:
  size_t qi(int h, int x, int a) const {
    return (static_cast<size_t>(h) * shape_.num_states + x) * shape_.num_actions + a;
  }
  TabularShape shape_;
  std::vector<double> q_;
  std::vector<double> v_;
};

ValueTables optimal_q_dp(const TabularMDP& mdp);

// Exact value of a deterministic policy (flattened h * |X| + x -> action).
ValueTables evaluate_policy(const TabularMDP& mdp, const std::vector<int>& policy);

double regret_bound(int horizon, long episodes, int num_states, int num_actions, double beta);

struct RegretReport {
  int episodes = 0;
  int mdps = 0;
  double bound = 0.0;
  // Across-MDP mean and standard error of the episode-l regret.
  std::vector<double> per_episode_mean;
  std::vector<double> per_episode_se;
  // Across-MDP mean and standard error of the regret accumulated up to l.
  std::vector<double> cumulative_mean;
  std::vector<double> cumulative_se;
  double mean_cumulative_regret = 0.0;
  double cumulative_std_error = 0.0;
  // Largest single-episode regret seen in any MDP.
  double max_episode_regret = 0.0;
};

struct RegretOptions {
  bool allow_non_preset = false;
  int threads = 1;
};

// Samples MDPs from the prior, runs tabular WTD on each and accumulates
// V*_0(x_0) - V^{pi_l}_0(x_0) by exact evaluation of each episode's policy.
RegretReport bayes_regret_mc(const DirichletPrior& prior, const WtdParams& params, int episodes,
                             int n_mdps, std::uint64_t seed, const RegretOptions& options = {});

struct OptimismCase {
  std::vector<double> values;  // V
  std::vector<double> alpha;
  double mu = 0.0;
  double sigma_sq = 0.0;

  double alpha_total() const;
  double dirichlet_mean() const;  // alpha^T V / alpha^T 1
  double span() const;
  // Throws kPrecondition unless the Gaussian dominance preconditions hold.
  void validate() const;
};

struct OptimismMargin {
  std::string function;
  double margin = 0.0;  // E[u(X)] - E[u(Y)]
  double std_error = 0.0;
};

// Monte-Carlo comparison of X ~ N(mu, sigma^2) against Y = P^T V with
// P ~ Dirichlet(alpha) for identity, two hinges and an exponential.
std::vector<OptimismMargin> optimism_mc_check(const OptimismCase& c, int n_samples, RngStream& rng);

// A random case satisfying the preconditions; tight != 0 puts mu and sigma^2
// exactly on their lower limits.
OptimismCase random_optimism_case(int n_outcomes, bool tight, RngStream& rng);

}  // namespace pinslab

#endif  // PINSLAB_REGRET_HPP_
