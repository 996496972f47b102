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

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "pinslab/harness.hpp"
#include "pinslab/regret.hpp"
#include "test_util.hpp"

namespace pinslab {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("pinslab_harness_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

TEST(Subcommands, NamesRoundTrip) {
  for (Subcommand s : {Subcommand::kRunTabular, Subcommand::kRunPins, Subcommand::kRunEnsemble,
                       Subcommand::kRunEpsgreedy, Subcommand::kRegret, Subcommand::kOptimismCheck,
                       Subcommand::kGradcheck}) {
    EXPECT_EQ(parse_subcommand(subcommand_name(s)), s);
  }
  EXPECT_PINSLAB_ERROR(parse_subcommand("run-everything"), ErrorCode::kUsage);
}

TEST(Config, DeepSeaDefaultsForPins) {
  const ExperimentConfig c = parse_config({"run-pins", "--env", "deep-sea", "--size", "10"});
  EXPECT_EQ(c.pins.mean_hidden, std::vector<int>{300});
  EXPECT_EQ(c.pins.uncertainty_hidden, std::vector<int>{512});
  EXPECT_EQ(c.pins.heads, 10);
  EXPECT_EQ(c.pins.beta1, 2.0);
  EXPECT_EQ(c.pins.beta2, 2.0);
  EXPECT_EQ(c.pins.sigma_initial, 2.0);
  EXPECT_EQ(c.pins.sigma_final, 2.0);
  EXPECT_EQ(c.pins.gamma, 1.0);
  EXPECT_EQ(c.pins.batch_size, 64);
  EXPECT_EQ(c.pins.n_batches, 10);
  EXPECT_EQ(c.pins.learning_rate, 1e-3);
  EXPECT_EQ(c.pins.target_period, 10);
  EXPECT_EQ(c.pins.selector, TargetSelector::kMean);
  EXPECT_EQ(c.seeds, (std::vector<std::uint64_t>{1, 2, 3, 4, 5}));
  EXPECT_EQ(c.ensemble.prior_scale, 10.0);
  EXPECT_EQ(c.dqn.epsilon, 0.1);
}

TEST(Config, CartpoleDefaults) {
  const ExperimentConfig c = parse_config({"run-pins", "--env", "cartpole"});
  EXPECT_EQ(c.pins.mean_hidden, (std::vector<int>{50, 50, 50}));
  EXPECT_EQ(c.pins.heads, 2);
  EXPECT_EQ(c.pins.sigma_initial, 2.0);
  EXPECT_EQ(c.pins.sigma_final, 1.0);
  EXPECT_EQ(c.pins.n_batches, 100);
  EXPECT_EQ(c.pins.gamma, 0.99);
  EXPECT_EQ(c.ensemble.prior_scale, 30.0);
  EXPECT_EQ(c.episodes, 3000);
}

TEST(Config, FlagsOverrideFile) {
  const fs::path dir = scratch_dir("precedence");
  std::ofstream(dir / "exp.cfg") << "# experiment\nbeta1 = 2\nheads = 7\nbatch-size = 32\n";
  const ExperimentConfig c = parse_config({"run-pins", "--config", (dir / "exp.cfg").string(), "--beta1", "3"});
  EXPECT_EQ(c.pins.beta1, 3.0);
  EXPECT_EQ(c.pins.heads, 7);
  EXPECT_EQ(c.pins.batch_size, 32);
  EXPECT_EQ(c.resolved.at("beta1"), "3");
  const ExperimentConfig eq = parse_config({"run-pins", "--beta1=4.5"});
  EXPECT_EQ(eq.pins.beta1, 4.5);
}

TEST(Config, ErrorsAreUsageErrorsNamingTheKey) {
  try {
    parse_config({"run-pins", "--episodes", "-5"});
    FAIL() << "expected a usage error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUsage);
    EXPECT_NE(std::string(e.what()).find("episodes"), std::string::npos);
  }
  try {
    parse_config({"run-pins", "--warp-speed", "9"});
    FAIL() << "expected a usage error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUsage);
    EXPECT_NE(std::string(e.what()).find("warp_speed"), std::string::npos);
  }
  EXPECT_PINSLAB_ERROR(parse_config({}), ErrorCode::kUsage);
  EXPECT_PINSLAB_ERROR(parse_config({"run-pins", "--beta1", "two"}), ErrorCode::kUsage);
  EXPECT_PINSLAB_ERROR(parse_config({"run-pins", "--selector", "best"}), ErrorCode::kUsage);
  EXPECT_PINSLAB_ERROR(parse_config({"run-pins", "--env", "pong"}), ErrorCode::kUsage);
  EXPECT_PINSLAB_ERROR(parse_config({"run-pins", "--lr"}), ErrorCode::kUsage);
  EXPECT_PINSLAB_ERROR(parse_config({"optimism-check", "--samples", "10"}), ErrorCode::kUsage);
  EXPECT_PINSLAB_ERROR(parse_config_text("beta1 2\n"), ErrorCode::kUsage);
  EXPECT_PINSLAB_ERROR(read_config_file("/nonexistent/pinslab.cfg"), ErrorCode::kIo);
}

TEST(Config, TabularDeepSeaPresetUsesSizeAsHorizon) {
  const ExperimentConfig c = parse_config({"run-tabular", "--size", "6"});
  EXPECT_TRUE(c.wtd.is_regret_preset(6));
  EXPECT_DOUBLE_EQ(c.wtd.beta(), 3.0);
}

TEST(Smoothing, MatchesBruteForceAndExamples) {
  const std::vector<double> constant(250, 0.4);
  EXPECT_EQ(smooth_max_100(constant), constant);
  std::vector<double> spike(101, 0.0);
  spike.back() = 1.0;
  const std::vector<double> s = smooth_max_100(spike);
  EXPECT_EQ(s[99], 0.0);
  EXPECT_EQ(s[100], 1.0);
  RngStream rng(1, 1);
  std::vector<double> noise(1000);
  for (double& v : noise) v = rng.normal();
  EXPECT_EQ(smooth_max_100(noise), oracle::windowed_max(noise, 100));
  EXPECT_TRUE(smooth_max_100(std::vector<double>{}).empty());
}

TEST(DetectOptimal, Examples) {
  std::vector<double> good(150, deep_sea_optimal_return(10));
  EXPECT_TRUE(detect_optimal_deep_sea(good, 10));
  EXPECT_FALSE(detect_optimal_deep_sea(std::vector<double>(150, 0.0), 10));
  std::vector<double> alt(200);
  for (size_t i = 0; i < alt.size(); ++i) alt[i] = i % 2 == 0 ? deep_sea_optimal_return(2) : 0.0;
  EXPECT_FALSE(detect_optimal_deep_sea(alt, 2));
  EXPECT_PINSLAB_ERROR(detect_optimal_deep_sea(std::vector<double>(99, 1.0), 2), ErrorCode::kInsufficientData);
  const auto rows = metric_rows(1, good);
  EXPECT_TRUE(detect_optimal_deep_sea(rows, 10));
}

TEST(MetricRows, CumulativeIsExactPrefixSum) {
  const std::vector<double> r{0.1, 0.2, -0.3, 1.0};
  const auto rows = metric_rows(4, r);
  double sum = 0.0;
  for (size_t i = 0; i < rows.size(); ++i) {
    sum += r[i];
    EXPECT_EQ(rows[i].cum_reward, sum);
    EXPECT_EQ(rows[i].episode, static_cast<int>(i) + 1);
    EXPECT_EQ(rows[i].seed, 4u);
  }
}

TEST(Csv, SeventeenDigitsRoundTrip) {
  RngStream rng(2, 2);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.normal() * std::pow(10.0, rng.uniform_int(20) - 10);
    EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
  }
  EXPECT_EQ(format_double(0.0), "0");
  EXPECT_EQ(std::strtod(format_double(-0.01 / 3).c_str(), nullptr), -0.01 / 3);
}

TEST(Experiment, RowCountOrderingAndPlottingContract) {
  const ExperimentConfig c =
      parse_config({"run-epsgreedy", "--size", "4", "--episodes", "10", "--seeds", "2,1", "--dqn-hidden", "8"});
  const auto rows = parse_csv(experiment_csv(c));
  ASSERT_EQ(rows.size(), 21u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"seed", "episode", "reward", "cum_reward", "smoothed_reward", "ms"}));
  EXPECT_EQ(rows[1][0], "1");
  EXPECT_EQ(rows[11][0], "2");
  // A consumer recomputing the smoothing from the reward column must agree exactly.
  for (int seed = 0; seed < 2; ++seed) {
    std::vector<double> rewards, smoothed;
    for (int i = 1 + 10 * seed; i <= 10 + 10 * seed; ++i) {
      rewards.push_back(std::strtod(rows[static_cast<size_t>(i)][2].c_str(), nullptr));
      smoothed.push_back(std::strtod(rows[static_cast<size_t>(i)][4].c_str(), nullptr));
      EXPECT_EQ(rows[static_cast<size_t>(i)][5], "0");
    }
    EXPECT_EQ(smoothed, oracle::windowed_max(rewards, 100));
  }
}

TEST(Experiment, RerunAndThreadedRunsAreByteIdentical) {
  const fs::path dir = scratch_dir("determinism");
  const std::vector<std::string> base{"run-pins", "--size", "4", "--episodes", "6", "--seeds", "1,2,3",
                                      "--mean-hidden", "8", "--unc-hidden", "8", "--heads", "3"};
  auto run = [&](const std::string& name, const std::string& threads) {
    std::vector<std::string> args = base;
    args.insert(args.end(), {"--output", (dir / name).string(), "--threads", threads});
    return run_experiment(parse_config(args));
  };
  const std::string a = run("a.csv", "1");
  const std::string b = run("b.csv", "1");
  const std::string t = run("t.csv", "3");
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_EQ(slurp(a), slurp(t));
  const std::string meta = slurp(a + ".meta");
  EXPECT_EQ(meta.rfind("pinslab_version=", 0), 0u);
  EXPECT_NE(meta.find("subcommand=run-pins"), std::string::npos);
  EXPECT_NE(meta.find("beta1=2"), std::string::npos);
}

TEST(Experiment, OutputDirectoryOverride) {
  const fs::path dir = scratch_dir("outdir");
  setenv("PINSLAB_OUT_DIR", (dir / "nested").c_str(), 1);
  const ExperimentConfig c = parse_config({"gradcheck", "--nets", "2", "--output", "somewhere/g.csv"});
  const std::string path = run_experiment(c);
  unsetenv("PINSLAB_OUT_DIR");
  EXPECT_EQ(fs::path(path), dir / "nested" / "g.csv");
  EXPECT_TRUE(fs::exists(path));
  EXPECT_TRUE(fs::exists(path + ".meta"));
}

TEST(Experiment, RegretCsvHasConstantBound) {
  const ExperimentConfig c = parse_config({"regret", "--episodes", "30", "--mdps", "5", "--horizon", "3",
                                           "--states", "2"});
  const auto rows = parse_csv(experiment_csv(c));
  ASSERT_EQ(rows.size(), 31u);
  EXPECT_EQ(rows[0].back(), "bound");
  const std::string bound = rows[1].back();
  EXPECT_DOUBLE_EQ(std::strtod(bound.c_str(), nullptr), regret_bound(3, 30, 2, 2, 3.0));
  for (size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(rows[i].back(), bound);
}

TEST(Experiment, GradcheckAndOptimismTables) {
  const auto grad = parse_csv(experiment_csv(parse_config({"gradcheck", "--nets", "4"})));
  ASSERT_EQ(grad.size(), 5u);
  for (size_t i = 1; i < grad.size(); ++i) EXPECT_LE(std::strtod(grad[i][1].c_str(), nullptr), 1e-4);
  const auto opt =
      parse_csv(experiment_csv(parse_config({"optimism-check", "--cases", "2", "--samples", "10000"})));
  EXPECT_EQ(opt.size(), 1u + 2u * 4u);
}

TEST(Experiment, NonRunSubcommandRejectedBySeedRunner) {
  const ExperimentConfig c = parse_config({"gradcheck"});
  EXPECT_PINSLAB_ERROR(run_seed(c, 1), ErrorCode::kUsage);
}

}  // namespace
}  // namespace pinslab
