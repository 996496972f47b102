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

#ifndef PINSLAB_HARNESS_HPP_
#define PINSLAB_HARNESS_HPP_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pinslab/baselines.hpp"
#include "pinslab/pins.hpp"
#include "pinslab/wtd.hpp"

namespace pinslab {

const char* version_string();

enum class Subcommand { kRunTabular, kRunPins, kRunEnsemble, kRunEpsgreedy, kRegret, kOptimismCheck, kGradcheck };

const char* subcommand_name(Subcommand s);
Subcommand parse_subcommand(const std::string& name);

struct ExperimentConfig {
  Subcommand subcommand = Subcommand::kRunPins;
  std::string env = "deep-sea";
  int size = 10;
  int episodes = 0;
  std::vector<std::uint64_t> seeds;
  std::string output;
  int threads = 1;
  bool record_time = false;

  PinsConfig pins;
  EnsembleConfig ensemble;
  DqnConfig dqn;

  WtdParams wtd;
  int horizon = 4;
  int states = 4;
  int actions = 2;
  double prior_beta = 3.0;
  bool random_prior = false;
  int mdps = 200;
  bool allow_non_preset = false;

  int cases = 20;
  int samples = 100000;
  int outcomes = 4;
  int nets = 10;

  // Every known key with its resolved textual value, for the metadata line.
  std::map<std::string, std::string> resolved;
};

// Raw key = value assignments; '-' in keys is normalized to '_'.
using ConfigValues = std::map<std::string, std::string>;

ConfigValues parse_config_text(const std::string& text, const std::string& origin = "config");
ConfigValues read_config_file(const std::string& path);
// Resolves defaults (some depend on subcommand and env) and validates types.
ExperimentConfig resolve_config(Subcommand subcommand, const ConfigValues& values);
// argv-style arguments without the program name: subcommand first, then
// --key value | --key=value | --config file. Flags override file values.
ExperimentConfig parse_config(const std::vector<std::string>& args);
// The merged user-supplied values behind parse_config, before defaults.
ConfigValues collect_config_values(const std::vector<std::string>& args, Subcommand& subcommand);
const std::vector<std::string>& known_config_keys();

std::vector<double> smooth_max_100(std::span<const double> rewards);
bool detect_optimal_deep_sea(std::span<const double> rewards, int size);

struct MetricRow {
  std::uint64_t seed = 0;
  int episode = 0;
  double reward = 0.0;
  double cum_reward = 0.0;
  double smoothed_reward = 0.0;
  double ms = 0.0;
};

std::vector<MetricRow> metric_rows(std::uint64_t seed, std::span<const double> rewards,
                                   std::span<const double> ms = {});
bool detect_optimal_deep_sea(std::span<const MetricRow> rows, int size);

struct SeedRun {
  std::uint64_t seed = 0;
  std::vector<double> rewards;
  std::vector<double> ms;
};

// One seed of a run-* subcommand.
SeedRun run_seed(const ExperimentConfig& config, std::uint64_t seed);
// All seeds, fanned out over config.threads workers, ordered by seed.
std::vector<SeedRun> run_seeds(const ExperimentConfig& config);

std::string format_double(double v);
std::string metrics_csv(std::span<const MetricRow> rows);
std::string metadata_line(const ExperimentConfig& config);

struct GradcheckResult {
  int net = 0;
  double max_rel_error = 0.0;
  size_t params = 0;
};
std::vector<GradcheckResult> run_gradcheck(int nets, std::uint64_t seed);

// Produces the subcommand's CSV text.
std::string experiment_csv(const ExperimentConfig& config);
// Writes the CSV plus "<output>.meta"; returns the path written.
std::string run_experiment(const ExperimentConfig& config);
std::string output_path(const ExperimentConfig& config);

}  // namespace pinslab

#endif  // PINSLAB_HARNESS_HPP_
