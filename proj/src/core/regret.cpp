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

#include "pinslab/regret.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <thread>

#include "pinslab/error.hpp"

namespace pinslab {

ValueTables::ValueTables(TabularShape shape)
    : shape_(shape),
      q_(static_cast<size_t>(shape.horizon + 1) * shape.num_states * shape.num_actions, 0.0),
      v_(static_cast<size_t>(shape.horizon + 1) * shape.num_states, 0.0) {}

namespace {

TabularShape shape_of(const TabularMDP& mdp) {
  return {mdp.horizon(), mdp.num_states(), mdp.num_actions()};
}

double backup(const TabularMDP& mdp, const ValueTables& t, int h, int x, int a) {
  const double* p = mdp.distribution(h, x, a);
  double total = 0.0;
  for (int o = 0; o < mdp.num_outcomes(); ++o) {
    if (p[o] == 0.0) continue;
    const Outcome out = mdp.outcome(o);
    total += p[o] * (out.r + t.v(h + 1, out.x_next));
  }
  return total;
}

double log_plus(double x) { return std::max(1.0, std::log(x)); }

}  // namespace

ValueTables optimal_q_dp(const TabularMDP& mdp) {
  ValueTables t(shape_of(mdp));
  for (int h = mdp.horizon() - 1; h >= 0; --h) {
    for (int x = 0; x < mdp.num_states(); ++x) {
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < mdp.num_actions(); ++a) {
        t.q(h, x, a) = backup(mdp, t, h, x, a);
        best = std::max(best, t.q(h, x, a));
      }
      t.v(h, x) = best;
    }
  }
  return t;
}

ValueTables evaluate_policy(const TabularMDP& mdp, const std::vector<int>& policy) {
  const size_t expected = static_cast<size_t>(mdp.horizon()) * mdp.num_states();
  if (policy.size() != expected) fail(ErrorCode::kShape, "policy size must be H * |X|");
  ValueTables t(shape_of(mdp));
  for (int h = mdp.horizon() - 1; h >= 0; --h) {
    for (int x = 0; x < mdp.num_states(); ++x) {
      for (int a = 0; a < mdp.num_actions(); ++a) t.q(h, x, a) = backup(mdp, t, h, x, a);
      const int a = policy[static_cast<size_t>(h * mdp.num_states() + x)];
      if (a < 0 || a >= mdp.num_actions()) fail(ErrorCode::kShape, "policy action out of range");
      t.v(h, x) = t.q(h, x, a);
    }
  }
  return t;
}

double regret_bound(int horizon, long episodes, int num_states, int num_actions, double beta) {
  if (horizon <= 0 || num_states <= 0 || num_actions <= 0 || !(beta > 0.0) || episodes < 0) {
    fail(ErrorCode::kInvalidArgument, "bound arguments must be positive");
  }
  const double h = horizon;
  const double l = static_cast<double>(episodes);
  const double xa = static_cast<double>(num_states) * num_actions;
  if (episodes == 0) return 0.0;
  return 5.0 * h * h * std::sqrt(beta * xa * l * log_plus(2.0 * xa * h * l)) * log_plus(1.0 + l / xa);
}

RegretReport bayes_regret_mc(const DirichletPrior& prior, const WtdParams& params, int episodes,
                             int n_mdps, std::uint64_t seed, const RegretOptions& options) {
  params.validate();
  if (episodes < 0 || n_mdps < 1) {
    fail(ErrorCode::kInvalidArgument, "need episodes >= 0 and at least one MDP sample");
  }
  const int horizon = prior.horizon();
  if (!options.allow_non_preset) {
    const double beta = params.beta();
    if (!params.is_regret_preset(horizon) || std::abs(beta - prior.beta()) > 1e-9 * prior.beta() ||
        beta < 3.0 - 1e-12) {
      fail(ErrorCode::kPrecondition,
           "regret parameters violate the preset sigma^2 = 3H^2, theta_bar = H, "
           "sigma^2/sigma0^2 = beta = prior concentration >= 3 (pass allow_non_preset to override)");
    }
  }
  const TabularShape shape{horizon, prior.num_states(), prior.num_actions()};
  const size_t l_count = static_cast<size_t>(episodes);
  std::vector<std::vector<double>> regret(static_cast<size_t>(n_mdps), std::vector<double>(l_count));

  auto run_one = [&](int i) {
    const std::uint64_t mdp_seed = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(i) + 1));
    RngStream mdp_rng(mdp_seed, streams::kMdpSampling);
    RngStream index_rng(mdp_seed, streams::kIndexSampling);
    const TabularMDP mdp = dirichlet_mdp_sample(prior, mdp_rng);
    const ValueTables optimal = optimal_q_dp(mdp);
    const double v_star = optimal.v(0, mdp.initial_state());
    MdpEnv env(mdp, mdp_seed);
    WtdLearner learner(shape, params);
    auto& row = regret[static_cast<size_t>(i)];
    for (int l = 0; l < episodes; ++l) {
      learner.begin_episode(index_rng);
      const ValueTables achieved = evaluate_policy(mdp, learner.greedy_policy());
      row[static_cast<size_t>(l)] = v_star - achieved.v(0, mdp.initial_state());
      StateId s = env.reset();
      for (int h = 0; h < horizon; ++h) {
        s.h = h;
        const int a = learner.act(s);
        const Outcome o = env.step(a);
        learner.observe(s, a, o);
        s = {h + 1, o.x_next};
      }
    }
  };

  const int threads = std::max(1, std::min(options.threads, n_mdps));
  if (threads == 1) {
    for (int i = 0; i < n_mdps; ++i) run_one(i);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&, t] {
        for (int i = t; i < n_mdps; i += threads) run_one(i);
      });
    }
    for (auto& th : pool) th.join();
  }

  RegretReport report;
  report.episodes = episodes;
  report.mdps = n_mdps;
  report.bound = regret_bound(horizon, episodes, shape.num_states, shape.num_actions, params.beta());
  report.per_episode_mean.assign(l_count, 0.0);
  report.per_episode_se.assign(l_count, 0.0);
  report.cumulative_mean.assign(l_count, 0.0);
  report.cumulative_se.assign(l_count, 0.0);
  const double n = n_mdps;
  std::vector<double> running(static_cast<size_t>(n_mdps), 0.0);
  for (size_t l = 0; l < l_count; ++l) {
    double sum = 0.0, sum_sq = 0.0, cum_sum = 0.0, cum_sq = 0.0;
    for (size_t i = 0; i < regret.size(); ++i) {
      const double d = regret[i][l];
      report.max_episode_regret = std::max(report.max_episode_regret, d);
      running[i] += d;
      sum += d;
      sum_sq += d * d;
      cum_sum += running[i];
      cum_sq += running[i] * running[i];
    }
    auto se = [n](double s, double sq) {
      if (n < 2) return 0.0;
      const double mean = s / n;
      const double var = std::max(0.0, (sq - n * mean * mean) / (n - 1.0));
      return std::sqrt(var / n);
    };
    report.per_episode_mean[l] = sum / n;
    report.per_episode_se[l] = se(sum, sum_sq);
    report.cumulative_mean[l] = cum_sum / n;
    report.cumulative_se[l] = se(cum_sum, cum_sq);
  }
  if (l_count > 0) {
    report.mean_cumulative_regret = report.cumulative_mean.back();
    report.cumulative_std_error = report.cumulative_se.back();
  }
  return report;
}

double OptimismCase::alpha_total() const { return std::accumulate(alpha.begin(), alpha.end(), 0.0); }

double OptimismCase::dirichlet_mean() const {
  double dot = 0.0;
  for (size_t i = 0; i < values.size(); ++i) dot += alpha[i] * values[i];
  return dot / alpha_total();
}

double OptimismCase::span() const {
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return *hi - *lo;
}

void OptimismCase::validate() const {
  if (values.empty() || values.size() != alpha.size()) {
    fail(ErrorCode::kPrecondition, "optimism case needs matching non-empty V and alpha");
  }
  for (double a : alpha) {
    if (!(a > 0.0)) fail(ErrorCode::kPrecondition, "alpha entries must be positive");
  }
  const double total = alpha_total();
  if (total < 3.0) fail(ErrorCode::kPrecondition, "alpha^T 1 must be at least 3");
  const double mean = dirichlet_mean();
  if (mu < mean - 1e-12 * std::max(1.0, std::abs(mean))) {
    fail(ErrorCode::kPrecondition, "mu must be >= alpha^T V / alpha^T 1");
  }
  const double s = span();
  const double min_var = 3.0 * s * s / total;
  if (sigma_sq < min_var - 1e-12 * std::max(1.0, min_var)) {
    fail(ErrorCode::kPrecondition, "sigma^2 must be >= 3 Span(V)^2 / alpha^T 1");
  }
}

std::vector<OptimismMargin> optimism_mc_check(const OptimismCase& c, int n_samples, RngStream& rng) {
  c.validate();
  if (n_samples < 10000) fail(ErrorCode::kPrecondition, "optimism check needs at least 1e4 samples");

  const double span = c.span();
  const double scale = span > 0.0 ? span : 1.0;  // exp test uses t / Span(V); Span = 0 degenerates to exp(t)
  const double mean_c = c.dirichlet_mean();
  const double max_v = *std::max_element(c.values.begin(), c.values.end());
  const std::vector<std::pair<std::string, std::function<double(double)>>> tests = {
      {"identity", [](double t) { return t; }},
      {"hinge_mean", [mean_c](double t) { return std::max(t - mean_c, 0.0); }},
      {"hinge_max", [max_v](double t) { return std::max(t - max_v, 0.0); }},
      {"exp_span", [scale](double t) { return std::exp(t / scale); }},
  };

  const size_t k = tests.size();
  std::vector<double> sx(k, 0.0), sxx(k, 0.0), sy(k, 0.0), syy(k, 0.0);
  const double sigma = std::sqrt(c.sigma_sq);
  const int n_out = static_cast<int>(c.values.size());
  for (int i = 0; i < n_samples; ++i) {
    const double x = c.mu + sigma * rng.normal();
    const auto p = sample_dirichlet(c.alpha.data(), n_out, rng);
    double y = 0.0;
    for (int j = 0; j < n_out; ++j) y += p[static_cast<size_t>(j)] * c.values[static_cast<size_t>(j)];
    for (size_t t = 0; t < k; ++t) {
      const double ux = tests[t].second(x);
      const double uy = tests[t].second(y);
      sx[t] += ux;
      sxx[t] += ux * ux;
      sy[t] += uy;
      syy[t] += uy * uy;
    }
  }
  const double n = n_samples;
  std::vector<OptimismMargin> out;
  for (size_t t = 0; t < k; ++t) {
    const double mx = sx[t] / n;
    const double my = sy[t] / n;
    const double vx = std::max(0.0, (sxx[t] - n * mx * mx) / (n - 1.0));
    const double vy = std::max(0.0, (syy[t] - n * my * my) / (n - 1.0));
    out.push_back({tests[t].first, mx - my, std::sqrt(vx / n + vy / n)});
  }
  return out;
}

OptimismCase random_optimism_case(int n_outcomes, bool tight, RngStream& rng) {
  if (n_outcomes < 1) fail(ErrorCode::kInvalidArgument, "need at least one outcome");
  OptimismCase c;
  const double value_scale = rng.uniform(0.5, 5.0);
  for (int i = 0; i < n_outcomes; ++i) c.values.push_back(value_scale * rng.uniform());
  const double total = rng.uniform(3.0, 12.0);
  double raw_total = 0.0;
  for (int i = 0; i < n_outcomes; ++i) {
    c.alpha.push_back(0.05 + rng.uniform());
    raw_total += c.alpha.back();
  }
  for (auto& a : c.alpha) a *= total / raw_total;
  const double s = c.span();
  c.mu = c.dirichlet_mean() + (tight ? 0.0 : rng.uniform(0.0, 0.2) * s);
  c.sigma_sq = 3.0 * s * s / c.alpha_total() * (tight ? 1.0 : rng.uniform(1.0, 2.0));
  return c;
}

}  // namespace pinslab
