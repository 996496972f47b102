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

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "pinslab/environments.hpp"
#include "pinslab/regret.hpp"
#include "pinslab/wtd.hpp"
#include "test_util.hpp"

namespace pinslab {
namespace {

WtdParams make_params(double sigma, double beta, double theta_bar) {
  WtdParams p;
  p.sigma = sigma;
  p.sigma0 = sigma / std::sqrt(beta);
  p.theta_bar = theta_bar;
  return p;
}

TEST(W2Gaussian, Examples) {
  EXPECT_EQ(w2_sq_gaussian(0, 1, 0, 1), 0.0);
  EXPECT_EQ(w2_sq_gaussian(1, 2, 4, 5), 18.0);
  EXPECT_EQ(w2_sq_gaussian(2.5, 0, -1.5, 0), 16.0);
  EXPECT_NEAR(oracle::w2_sq_by_quantiles(1, 2, 4, 5), 18.0, 1e-6);
  EXPECT_PINSLAB_ERROR(w2_sq_gaussian(0, -1, 0, 1), ErrorCode::kDomain);
  EXPECT_PINSLAB_ERROR(w2_sq_gaussian(0, 1, 0, -1e-300), ErrorCode::kDomain);
}

TEST(W2Gaussian, SymmetricNonNegativeZeroOnlyWhenEqual) {
  RngStream rng(1, 1);
  for (int i = 0; i < 200; ++i) {
    const double a = rng.normal(), b = rng.uniform() * 3, c = rng.normal(), d = rng.uniform() * 3;
    EXPECT_EQ(w2_sq_gaussian(a, b, c, d), w2_sq_gaussian(c, d, a, b));
    EXPECT_GT(w2_sq_gaussian(a, b, c, d), 0.0);
    EXPECT_EQ(w2_sq_gaussian(a, b, a, b), 0.0);
  }
}

TEST(WtdUpdate, PriorOnlyWhenNoData) {
  const TabularShape shape{3, 2, 2};
  const WtdParams p = make_params(2.0, 4.0, 1.5);
  const IndexedGaussianQ q = wtd_update_pass(OutcomeDataset(shape), p, IndexTable(shape, 0.7));
  for (int h = 0; h < 3; ++h)
    for (int x = 0; x < 2; ++x)
      for (int a = 0; a < 2; ++a) {
        EXPECT_DOUBLE_EQ(q.nu(h, x, a), 1.5);
        EXPECT_DOUBLE_EQ(q.m(h, x, a), 1.0);
      }
  for (int x = 0; x < 2; ++x)
    for (int a = 0; a < 2; ++a) {
      EXPECT_EQ(q.nu(3, x, a), 0.0);
      EXPECT_EQ(q.m(3, x, a), 0.0);
    }
}

TEST(WtdUpdate, TerminalStepArithmetic) {
  const TabularShape shape{1, 1, 1};
  OutcomeDataset data(shape);
  data.add(0, 0, 0, {1.0, 0});
  const WtdParams p = make_params(2.0, 3.0, 2.0);
  const IndexedGaussianQ q = wtd_update_pass(data, p, IndexTable(shape));
  EXPECT_DOUBLE_EQ(q.nu(0, 0, 0), 1.75);
}

TEST(WtdUpdate, ScaleArithmetic) {
  const WtdParams p = make_params(2.0, 4.0, 0.0);
  EXPECT_DOUBLE_EQ(p.sigma0, 1.0);
  EXPECT_DOUBLE_EQ(posterior_scale(1, p), 1.2);
  EXPECT_DOUBLE_EQ(posterior_scale(0, p), 1.0);
}

TEST(WtdUpdate, UsesUpdatedNextLevelWithSampledIndex) {
  const TabularShape shape{2, 2, 2};
  OutcomeDataset data(shape);
  data.add(0, 0, 1, {0.0, 1});
  data.add(0, 0, 1, {1.0, 0});
  data.add(1, 1, 0, {1.0, 0});
  const WtdParams p = make_params(1.0, 3.0, 0.5);
  IndexTable z(shape, 0.0);
  z(1, 1, 1) = 2.0;
  z(1, 0, 0) = -1.0;
  const IndexedGaussianQ q = wtd_update_pass(data, p, z);
  const double m_prior = p.sigma0;
  const double q11[2] = {(1.0 + 3 * 0.5) / 4.0 + posterior_scale(1, p) * 0.0, 0.5 + m_prior * 2.0};
  const double q10[2] = {0.5 + m_prior * -1.0, 0.5};
  const double next_1 = std::max(q11[0], q11[1]);
  const double next_0 = std::max(q10[0], q10[1]);
  EXPECT_NEAR(q.nu(0, 0, 1), (0.0 + next_1 + 1.0 + next_0 + 3 * 0.5) / 5.0, 1e-14);
  EXPECT_NEAR(q.m(0, 0, 1), (std::sqrt(2.0) * 1.0 + 3.0 * m_prior) / 5.0, 1e-14);
}

TEST(GreedyAction, Examples) {
  const TabularShape shape{1, 1, 2};
  IndexedGaussianQ q(shape);
  IndexTable z(shape, 0.0);
  q.nu(0, 0, 0) = 0.1;
  q.nu(0, 0, 1) = 0.9;
  EXPECT_EQ(greedy_action(q, z, {0, 0}), 1);
  q.nu(0, 0, 0) = q.nu(0, 0, 1) = 0.0;
  q.m(0, 0, 0) = q.m(0, 0, 1) = 1.0;
  z(0, 0, 0) = -1;
  z(0, 0, 1) = 1;
  EXPECT_EQ(greedy_action(q, z, {0, 0}), 1);
  z(0, 0, 1) = -1;
  EXPECT_EQ(greedy_action(q, z, {0, 0}), 0);
  EXPECT_PINSLAB_ERROR(greedy_action(q, z, {1, 0}), ErrorCode::kNoAction);
}

TEST(GreedyAction, InvariantToConstantShift) {
  const TabularShape shape{1, 1, 4};
  RngStream rng(2, 2);
  for (int trial = 0; trial < 100; ++trial) {
    IndexedGaussianQ q(shape);
    const IndexTable z = IndexTable::sample(shape, rng);
    for (int a = 0; a < 4; ++a) {
      q.nu(0, 0, a) = rng.normal();
      q.m(0, 0, a) = rng.uniform();
    }
    const int before = greedy_action(q, z, {0, 0});
    const double shift = 10.0 * rng.normal();
    for (int a = 0; a < 4; ++a) q.nu(0, 0, a) += shift;
    EXPECT_EQ(greedy_action(q, z, {0, 0}), before);
  }
}

TEST(ScaleBound, HoldsEverywhereAndVanishes) {
  for (double beta : {3.0, 5.0, 30.0}) {
    for (double sigma : {0.5, 1.0, 6.9}) {
      const WtdParams p = make_params(sigma, beta, 0.0);
      for (long n = 0; n <= 100000; n = n < 10 ? n + 1 : n * 3) {
        EXPECT_LE(posterior_scale(n, p), std::sqrt(2.0 * sigma * sigma / (n + beta)) * (1 + 1e-15));
      }
      EXPECT_LT(posterior_scale(100000000, p), 1e-3 * sigma);
    }
  }
  const WtdParams p = make_params(std::sqrt(3.0), 3.0, 0.0);
  EXPECT_DOUBLE_EQ(posterior_scale(0, p), 1.0);
  EXPECT_GT(posterior_scale(1, p), 1.0);
}

TEST(StochasticBellman, PriorOnlyAndSingleOutcome) {
  const TabularShape shape{2, 2, 2};
  const WtdParams p = make_params(1.0, 3.0, 0.4);
  OutcomeDataset data(shape);
  ActionValueTable zero(2, 2);
  auto [mu0, s0] = stochastic_bellman_moments(zero, data, p, 0, 0, 0);
  EXPECT_DOUBLE_EQ(mu0, 0.4);
  EXPECT_DOUBLE_EQ(s0, p.sigma0);
  data.add(0, 1, 1, {1.0, 0});
  auto [mu1, s1] = stochastic_bellman_moments(zero, data, p, 0, 1, 1);
  EXPECT_DOUBLE_EQ(mu1, (1.0 + 3.0 * 0.4) / 4.0);
  EXPECT_DOUBLE_EQ(s1, posterior_scale(1, p));
}

TEST(StochasticBellman, MonteCarloMatchesMoments) {
  const TabularShape shape{2, 3, 2};
  const WtdParams p = make_params(1.3, 3.0, 0.2);
  OutcomeDataset data(shape);
  data.add(0, 1, 0, {1.0, 2});
  data.add(0, 1, 0, {0.0, 1});
  data.add(0, 1, 0, {0.0, 2});
  ActionValueTable next(3, 2);
  next(1, 0) = 0.3;
  next(1, 1) = -0.2;
  next(2, 0) = 0.9;
  next(2, 1) = 1.4;
  const auto [mu, sd] = stochastic_bellman_moments(next, data, p, 0, 1, 0);
  EXPECT_NEAR(mu, (1.0 + 1.4 + 0.3 + 1.4 + 3 * 0.2) / 6.0, 1e-14);
  RngStream rng(3, 3);
  constexpr int n = 100000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = stochastic_bellman_apply(next, data, p, 0, rng)(1, 0);
    s += v;
    s2 += v * v;
  }
  const double mean = s / n;
  const double var = s2 / n - mean * mean;
  EXPECT_NEAR(mean, mu, 3.0 * sd / std::sqrt(n));
  // Standard error of the sample variance for a Gaussian is sd^2 sqrt(2 / n).
  EXPECT_NEAR(var, sd * sd, 3.0 * sd * sd * std::sqrt(2.0 / n));
}

TEST(FixedIndex, ZeroIndexMatchesUpdatePass) {
  RngStream rng(4, 4);
  const TabularShape shape{3, 3, 2};
  OutcomeDataset data(shape);
  for (int i = 0; i < 60; ++i) {
    data.add(rng.uniform_int(3), rng.uniform_int(3), rng.uniform_int(2),
             {static_cast<double>(rng.uniform_int(2)), rng.uniform_int(3)});
  }
  const WtdParams p = make_params(1.0, 3.0, 0.5);
  const IndexedGaussianQ a = fixed_index_update(data, p, 0.0);
  const IndexedGaussianQ b = wtd_update_pass(data, p, IndexTable(shape, 0.0));
  for (int h = 0; h < 3; ++h)
    for (int x = 0; x < 3; ++x)
      for (int act = 0; act < 2; ++act) EXPECT_NEAR(a.nu(h, x, act), b.nu(h, x, act), 1e-13);
}

TEST(FixedIndex, SingleActionScaleDoesNotDependOnIndex) {
  RngStream rng(5, 5);
  const TabularShape shape{3, 2, 1};
  OutcomeDataset data(shape);
  for (int i = 0; i < 30; ++i) data.add(rng.uniform_int(3), rng.uniform_int(2), 0, {1.0, rng.uniform_int(2)});
  const WtdParams p = make_params(1.0, 3.0, 0.5);
  const IndexedGaussianQ a = fixed_index_update(data, p, -1.7);
  const IndexedGaussianQ b = fixed_index_update(data, p, 2.4);
  for (int h = 0; h < 3; ++h)
    for (int x = 0; x < 2; ++x) {
      EXPECT_DOUBLE_EQ(a.m(h, x, 0), b.m(h, x, 0));
      EXPECT_DOUBLE_EQ(a.nu(h, x, 0), b.nu(h, x, 0));
    }
}

TEST(FixedIndex, TerminalLevelUsesRewardsOnly) {
  const TabularShape shape{2, 1, 1};
  OutcomeDataset data(shape);
  data.add(1, 0, 0, {1.0, 0});
  data.add(1, 0, 0, {0.0, 0});
  const WtdParams p = make_params(2.0, 3.0, 1.0);
  const IndexedGaussianQ q = fixed_index_update(data, p, 0.8);
  EXPECT_DOUBLE_EQ(q.nu(1, 0, 0), (1.0 + 3.0) / 5.0);
  EXPECT_DOUBLE_EQ(q.m(1, 0, 0), posterior_scale(2, p));
}

TEST(FixedIndex, MatchesNumericMinimizerOfModifiedTargetLoss) {
  RngStream rng(6, 6);
  for (int inst = 0; inst < 10; ++inst) {
    const TabularShape shape{2, 2, 2};
    OutcomeDataset data(shape);
    for (int h = 0; h < 2; ++h)
      for (int x = 0; x < 2; ++x)
        for (int a = 0; a < 2; ++a) {
          const int k = rng.uniform_int(4);
          for (int i = 0; i < k; ++i) data.add(h, x, a, {static_cast<double>(rng.uniform_int(2)), rng.uniform_int(2)});
        }
    const WtdParams p = make_params(0.5 + rng.uniform() * 2.0, 3.0 + rng.uniform() * 3.0, rng.uniform() * 2.0);
    const double z = rng.normal();
    const IndexedGaussianQ q = fixed_index_update(data, p, z);
    // Level-by-level numeric minimization built only from the oracle's own values.
    std::vector<double> nu(2 * 2 * 2 * 3, 0.0), m(nu.size(), 0.0);
    auto at = [](int h, int x, int a) { return static_cast<size_t>((h * 2 + x) * 2 + a); };
    for (int h = 1; h >= 0; --h) {
      for (int x = 0; x < 2; ++x)
        for (int a = 0; a < 2; ++a) {
          const auto outs = data.outcomes(h, x, a);
          const double n = static_cast<double>(data.count(h, x, a));
          auto loss = [&](const std::vector<double>& v) {
            double total = 0.0;
            for (const auto& o : outs) {
              double mean_t = o.r, scale_t = p.sigma / std::sqrt(n);
              if (h + 1 < 2) {
                const size_t i0 = at(h + 1, o.x_next, 0), i1 = at(h + 1, o.x_next, 1);
                const size_t best = nu[i1] + m[i1] * z > nu[i0] + m[i0] * z ? i1 : i0;
                mean_t += nu[best];
                scale_t += m[best];
              }
              const double dm = v[0] - mean_t, ds = v[1] - scale_t;
              total += static_cast<double>(o.count) * (dm * dm + ds * ds);
            }
            const double pm = v[0] - p.theta_bar, ps = v[1] - p.sigma0;
            return total + p.beta() * (pm * pm + ps * ps);
          };
          const oracle::Minimum best = oracle::nelder_mead(loss, {0.0, 1.0});
          nu[at(h, x, a)] = best.x[0];
          m[at(h, x, a)] = best.x[1];
          EXPECT_NEAR(q.nu(h, x, a), best.x[0], 1e-4 * std::max(1.0, std::abs(best.x[0])));
          EXPECT_NEAR(q.m(h, x, a), best.x[1], 1e-4 * std::max(1.0, std::abs(best.x[1])));
        }
    }
  }
}

TEST(RunWtd, ZeroEpisodesLeavesPrior) {
  DeepSeaTabularEnv env(DeepSeaEnv(3, 1));
  RngStream rng(1, streams::kIndexSampling);
  const WtdParams p = WtdParams::regret_preset(3, 3.0);
  const WtdRun run = run_wtd(env, p, 0, rng);
  EXPECT_TRUE(run.transcripts.empty());
  EXPECT_DOUBLE_EQ(run.q.nu(0, 0, 0), 3.0);
  EXPECT_DOUBLE_EQ(run.q.m(2, 1, 1), p.sigma0);
}

TEST(RunWtd, ShapeMismatchIsConfigError) {
  DeepSeaTabularEnv env(DeepSeaEnv(3, 1));
  WtdLearner learner({4, 3, 2}, WtdParams::regret_preset(4, 3.0));
  RngStream rng(1, 1);
  EXPECT_PINSLAB_ERROR(run_wtd(env, learner, 1, rng), ErrorCode::kConfig);
}

TEST(RunWtd, TranscriptsAndBufferAgree) {
  DeepSeaTabularEnv env(DeepSeaEnv(4, 2));
  WtdLearner learner({4, 4, 2}, WtdParams::regret_preset(4, 3.0));
  RngStream rng(2, streams::kIndexSampling);
  const WtdRun run = run_wtd(env, learner, 25, rng);
  ASSERT_EQ(run.transcripts.size(), 25u);
  EXPECT_EQ(learner.data().total(), 100);
  for (const auto& t : run.transcripts) {
    ASSERT_EQ(t.steps.size(), 4u);
    EXPECT_TRUE(t.steps.back().done);
    for (int h = 0; h < 4; ++h) EXPECT_EQ(t.steps[static_cast<size_t>(h)].state.h, h);
  }
}

// Single path, one action: nu should approach Q* as data accumulates.
TEST(RunWtd, SinglePathConvergesTowardTrueValues) {
  TabularMDP mdp(3, 1, 1);
  const double p_reward[3] = {0.3, 0.8, 0.5};
  for (int h = 0; h < 3; ++h) {
    mdp.prob(h, 0, 0, 0) = 1.0 - p_reward[h];
    mdp.prob(h, 0, 0, 1) = p_reward[h];
  }
  const ValueTables truth = optimal_q_dp(mdp);
  auto error_at = [&](int episodes) {
    double total = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      MdpEnv env(mdp, seed);
      RngStream rng(seed, streams::kIndexSampling);
      WtdLearner learner({3, 1, 1}, make_params(1.0, 3.0, 1.0));
      run_wtd(env, learner, episodes, rng);
      const IndexedGaussianQ q = wtd_update_pass(learner.data(), learner.params(), IndexTable({3, 1, 1}, 0.0));
      for (int h = 0; h < 3; ++h) total += std::abs(q.nu(h, 0, 0) - truth.q(h, 0, 0));
    }
    return total / 20.0;
  };
  EXPECT_LT(error_at(500), error_at(10));
  EXPECT_LT(error_at(500), 0.1);
}

bool follows_optimal_path(const WtdLearner& learner, const DeepSeaEnv& env) {
  const IndexedGaussianQ q = wtd_update_pass(learner.data(), learner.params(), IndexTable(learner.shape(), 0.0));
  for (int h = 0; h < env.size(); ++h) {
    const int right = env.mask(h, h) == 1 ? 0 : 1;
    if (q.nu(h, h, right) <= q.nu(h, h, 1 - right)) return false;
  }
  return true;
}

TEST(RunWtd, DeepSeaSixFindsTheOptimalPolicy) {
  int found = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    DeepSeaTabularEnv env(DeepSeaEnv(6, seed));
    WtdLearner learner({6, 6, 2}, WtdParams::regret_preset(6, 3.0));
    RngStream rng(seed, streams::kIndexSampling);
    run_wtd(env, learner, 500, rng);
    found += follows_optimal_path(learner, env.env()) ? 1 : 0;
  }
  RecordProperty("seeds_found", found);
  EXPECT_GE(found, 4);
}

}  // namespace
}  // namespace pinslab
