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
#include <set>
#include <sstream>

#include "pinslab/environments.hpp"
#include "pinslab/pins.hpp"
#include "test_util.hpp"

namespace pinslab {
namespace {

PinsConfig small_config(int heads = 4) {
  PinsConfig c;
  c.mean_hidden = {16};
  c.uncertainty_hidden = {16};
  c.heads = heads;
  c.batch_size = 8;
  c.n_batches = 2;
  return c;
}

Eigen::VectorXd random_state(int n, RngStream& rng) {
  Eigen::VectorXd s(n);
  for (int i = 0; i < n; ++i) s[i] = rng.normal();
  return s;
}

int brute_argmax(const Eigen::VectorXd& v) {
  int best = 0;
  for (int a = 0; a < v.size(); ++a)
    if (v[a] > v[best]) best = a;
  return best;
}

TEST(ArgmaxAction, LowestIndexWinsTies) {
  Eigen::VectorXd v(4);
  v << 1.0, 3.0, 3.0, -1.0;
  EXPECT_EQ(argmax_action(v), 1);
  EXPECT_PINSLAB_ERROR(argmax_action(Eigen::VectorXd()), ErrorCode::kNoAction);
}

TEST(PinsConfig, SigmaScheduleIsLinear) {
  PinsConfig c;
  c.sigma_initial = 2.0;
  c.sigma_final = 1.0;
  c.decay_episodes = 11;
  EXPECT_EQ(c.sigma_at(1), 2.0);
  EXPECT_DOUBLE_EQ(c.sigma_at(6), 1.5);
  EXPECT_EQ(c.sigma_at(11), 1.0);
  EXPECT_EQ(c.sigma_at(500), 1.0);
  c.heads = 0;
  EXPECT_PINSLAB_ERROR(c.validate(), ErrorCode::kConfig);
}

TEST(PinsAgent, ActionSelectionMatchesBruteForce) {
  PinsAgent agent(5, 3, small_config(), 11);
  // Move the targets away from the online nets so the selectors differ.
  agent.mutable_mean_net().mutable_params().biases.back()[1] += 0.3;
  RngStream rng(1, 1);
  const double b1 = agent.config().beta1, b2 = agent.config().beta2;
  for (int i = 0; i < 100; ++i) {
    const Eigen::VectorXd s = random_state(5, rng);
    const double z = rng.normal();
    const int u = rng.uniform_int(4);
    const Eigen::VectorXd q = agent.mean_net().forward(s) + b1 * agent.mean_prior().forward(s) +
                              z * (agent.uncertainty_net().forward(s, u) + b2 * agent.uncertainty_prior().forward(s, u));
    EXPECT_EQ(agent.act(s, z, u), brute_argmax(q));
    const Eigen::VectorXd mean_t = agent.mean_target().forward(s) + b1 * agent.mean_prior().forward(s);
    EXPECT_EQ(agent.select_abar(s), brute_argmax(mean_t));
    const Eigen::VectorXd q_t = mean_t + z * (agent.uncertainty_target().forward(s, u) +
                                              b2 * agent.uncertainty_prior().forward(s, u));
    EXPECT_EQ(agent.select_atilde(s, z, u), brute_argmax(q_t));
  }
  EXPECT_PINSLAB_ERROR(agent.act(Eigen::VectorXd::Zero(5), 0.0, 4), ErrorCode::kIndex);
  EXPECT_PINSLAB_ERROR(agent.select_atilde(Eigen::VectorXd::Zero(5), 0.0, -1), ErrorCode::kIndex);
}

TEST(PinsAgent, UncertaintyOutputIsPositive) {
  PinsAgent agent(3, 2, small_config(), 2);
  RngStream rng(2, 2);
  for (int i = 0; i < 50; ++i) {
    const Eigen::VectorXd s = random_state(3, rng);
    for (int u = 0; u < 4; ++u) EXPECT_GT(agent.uncertainty_net().forward(s, u).minCoeff(), 0.0);
  }
}

TEST(PinsAgent, TrainedHeadsComeFromTheMask) {
  PinsAgent agent(2, 2, small_config(5), 3);
  RngStream rng(3, 3);
  for (int i = 0; i < 40; ++i) {
    std::vector<std::uint8_t> mask(5, 0);
    if (i % 4 != 0)
      for (auto& m : mask) m = rng.bernoulli(0.5) ? 1 : 0;
    agent.buffer().add({random_state(2, rng), i % 2, 0.0, random_state(2, rng), false, mask});
  }
  std::vector<size_t> rows(40);
  for (size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  agent.train_batch(rows, 1.0);
  const BatchTrace& trace = agent.last_batch();
  long trained = 0;
  for (size_t i = 0; i < rows.size(); ++i) {
    const auto& mask = agent.buffer().at(rows[i]).mask;
    const bool any = std::find(mask.begin(), mask.end(), 1) != mask.end();
    if (!any) {
      EXPECT_EQ(trace.heads[i], -1);
    } else {
      ASSERT_GE(trace.heads[i], 0);
      EXPECT_EQ(mask[static_cast<size_t>(trace.heads[i])], 1);
      ++trained;
    }
  }
  long counted = 0;
  for (long c : agent.head_update_counts()) counted += c;
  EXPECT_EQ(counted, trained);
}

TEST(PinsAgent, TrainingLeavesPriorsUntouched) {
  PinsAgent agent(6, 2, small_config(), 4);
  DeepSeaEnv env(6, 4);
  PinsAgent fresh(36, 2, small_config(), 4);
  const std::uint64_t before = fresh.prior_checksum();
  live_is(fresh, env, 15);
  EXPECT_EQ(fresh.prior_checksum(), before);
  EXPECT_FALSE(fresh.mean_prior().trainable());
}

// Single terminal transition: both networks regress onto fixed numbers.
TEST(PinsAgent, TerminalTransitionConvergesToRewardAndSigma) {
  PinsConfig c = small_config(1);
  c.learning_rate = 1e-2;
  c.gamma = 0.9;
  PinsAgent agent(2, 2, c, 5);
  Eigen::VectorXd s(2), s_next(2);
  s << 1.0, -0.5;
  s_next << 3.0, 2.0;
  agent.buffer().add({s, 1, 0.7, s_next, true, {1}});
  const std::vector<size_t> rows{0};
  // The output can never drop below beta2 times the softplus prior, so the
  // target has to sit above that floor.
  const double floor = c.beta2 * agent.uncertainty_prior().forward(s, 0)[1];
  const double sigma = floor + 1.5;
  for (int i = 0; i < 5000; ++i) agent.train_batch(rows, sigma);
  const double mean = agent.mean_net().forward(s)[1] + c.beta1 * agent.mean_prior().forward(s)[1];
  const double unc = agent.uncertainty_net().forward(s, 0)[1] + c.beta2 * agent.uncertainty_prior().forward(s, 0)[1];
  EXPECT_NEAR(mean, 0.7, 1e-3);
  EXPECT_NEAR(unc, sigma, 1e-3);
}

// s0 -> s1 -> end: uncertainty at s0 accumulates sigma + gamma * sigma.
TEST(PinsAgent, TwoStepChainPropagatesUncertainty) {
  PinsConfig c = small_config(1);
  c.learning_rate = 1e-2;
  c.gamma = 0.9;
  PinsAgent agent(2, 1, c, 6);
  Eigen::VectorXd s0(2), s1(2), end(2);
  s0 << 1.0, 0.0;
  s1 << 0.0, 1.0;
  end << 0.0, 0.0;
  agent.buffer().add({s0, 0, 0.0, s1, false, {1}});
  agent.buffer().add({s1, 0, 1.0, end, true, {1}});
  const std::vector<size_t> rows{0, 1};
  const double floor = c.beta2 * std::max(agent.uncertainty_prior().forward(s0, 0)[0],
                                          agent.uncertainty_prior().forward(s1, 0)[0]);
  const double sigma = floor + 1.0;
  for (int round = 0; round < 30; ++round) {
    for (int i = 0; i < 300; ++i) agent.train_batch(rows, sigma);
    agent.sync_targets();
  }
  auto unc = [&](const Eigen::VectorXd& s) {
    return agent.uncertainty_net().forward(s, 0)[0] + c.beta2 * agent.uncertainty_prior().forward(s, 0)[0];
  };
  auto mean = [&](const Eigen::VectorXd& s) {
    return agent.mean_net().forward(s)[0] + c.beta1 * agent.mean_prior().forward(s)[0];
  };
  EXPECT_NEAR(unc(s1), sigma, 1e-2);
  EXPECT_NEAR(unc(s0), sigma + 0.9 * sigma, 1e-2);
  EXPECT_NEAR(mean(s1), 1.0, 1e-2);
  EXPECT_NEAR(mean(s0), 0.9, 1e-2);
}

// With zero prior scales and no uncertainty training the mean network is a
// plain DQN; replay the same minibatches through a hand-written reference.
TEST(PinsAgent, ReducesToDqnBitForBit) {
  PinsConfig c = small_config(3);
  c.beta1 = 0.0;
  c.beta2 = 0.0;
  c.train_uncertainty = false;
  c.gamma = 0.95;
  PinsAgent agent(3, 2, c, 7);
  Mlp ref = agent.mean_net();
  Mlp ref_target = agent.mean_target();
  AdamState opt = AdamState::for_network(ref.shape(), c.learning_rate);
  RngStream rng(7, 70);
  for (int i = 0; i < 30; ++i) {
    agent.buffer().add({random_state(3, rng), rng.uniform_int(2), rng.uniform(), random_state(3, rng),
                        rng.bernoulli(0.2), draw_mask(3, rng)});
  }
  for (int step = 0; step < 25; ++step) {
    const std::vector<size_t> rows = agent.buffer().sample_indices(8, rng);
    agent.train_batch(rows, 1.0);
    const Minibatch b = agent.buffer().gather(rows);
    const ForwardCache cache = forward_cached(ref, b.s);
    const Eigen::MatrixXd next = ref_target.forward_batch(b.s_next);
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(2, b.size());
    for (int i = 0; i < b.size(); ++i) {
      const size_t si = static_cast<size_t>(i);
      const double best = std::max(next(0, i), next(1, i));
      const double target = b.r[si] + (b.done[si] ? 0.0 : c.gamma) * best;
      grad(b.a[si], i) = 2.0 * (cache.output(b.a[si], i) - target);
    }
    adam_step(ref, backprop(ref, cache, grad), opt);
    if (step % 10 == 9) {
      agent.sync_targets();
      ref_target.copy_parameters_from(ref);
    }
    ASSERT_EQ(agent.mean_net().checksum(), ref.checksum()) << step;
  }
}

TEST(PinsAgent, SameSeedSameRun) {
  auto run = [](std::uint64_t seed) {
    DeepSeaEnv env(5, 1);
    PinsAgent agent(25, 2, small_config(), seed);
    std::vector<double> returns = live_is(agent, env, 12);
    returns.push_back(static_cast<double>(agent.mean_net().checksum() % 1000003));
    return returns;
  };
  EXPECT_EQ(run(3), run(3));
  EXPECT_NE(run(3), run(4));
}

TEST(PinsAgent, SingleHeadAndZeroEpisodes) {
  DeepSeaEnv env(4, 2);
  PinsAgent agent(16, 2, small_config(1), 8);
  EXPECT_TRUE(live_is(agent, env, 0).empty());
  EXPECT_EQ(agent.episodes_completed(), 0);
  EXPECT_FALSE(agent.learn_from_buffer(1, 4, 1.0));
  const std::vector<double> returns = live_is(agent, env, 5);
  EXPECT_EQ(returns.size(), 5u);
  EXPECT_EQ(agent.buffer().size(), 20u);
  EXPECT_EQ(agent.buffer().at(0).mask.size(), 1u);
}

TEST(PinsAgent, SampledSelectorRuns) {
  PinsConfig c = small_config();
  c.selector = TargetSelector::kSampled;
  DeepSeaEnv env(4, 3);
  PinsAgent agent(16, 2, c, 9);
  EXPECT_EQ(live_is(agent, env, 6).size(), 6u);
}

TEST(PinsAgent, EnvironmentShapeMismatch) {
  DeepSeaEnv env(4, 3);
  PinsAgent agent(9, 2, small_config(), 9);
  EXPECT_PINSLAB_ERROR(agent.run_episode(env), ErrorCode::kConfig);
}

TEST(PinsAgent, CheckpointRestoresNetworks) {
  DeepSeaEnv env(4, 5);
  PinsAgent agent(16, 2, small_config(), 10);
  live_is(agent, env, 13);
  std::stringstream buf;
  agent.save(buf);
  PinsAgent other(16, 2, small_config(), 99);
  other.load(buf);
  EXPECT_EQ(other.episodes_completed(), 13);
  EXPECT_EQ(other.prior_checksum(), agent.prior_checksum());
  EXPECT_EQ(other.mean_net().checksum(), agent.mean_net().checksum());
  EXPECT_EQ(other.uncertainty_target().checksum(), agent.uncertainty_target().checksum());
  RngStream rng(10, 10);
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd s = random_state(16, rng);
    EXPECT_EQ(other.act(s, 0.4, 2), agent.act(s, 0.4, 2));
  }
  PinsConfig wider = small_config();
  wider.mean_hidden = {17};
  PinsAgent mismatched(16, 2, wider, 1);
  std::stringstream again;
  agent.save(again);
  EXPECT_PINSLAB_ERROR(mismatched.load(again), ErrorCode::kFormat);
}

}  // namespace
}  // namespace pinslab
