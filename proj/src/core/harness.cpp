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

#include "pinslab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <thread>

#include "pinslab/environments.hpp"
#include "pinslab/error.hpp"
#include "pinslab/regret.hpp"

namespace pinslab {

const char* version_string() { return PINSLAB_VERSION_STRING; }

namespace {

struct SubcommandName {
  Subcommand sub;
  const char* name;
};

constexpr SubcommandName kSubcommands[] = {
    {Subcommand::kRunTabular, "run-tabular"},   {Subcommand::kRunPins, "run-pins"},
    {Subcommand::kRunEnsemble, "run-ensemble"}, {Subcommand::kRunEpsgreedy, "run-epsgreedy"},
    {Subcommand::kRegret, "regret"},            {Subcommand::kOptimismCheck, "optimism-check"},
    {Subcommand::kGradcheck, "gradcheck"},
};

bool is_deep_run(Subcommand s) {
  return s == Subcommand::kRunPins || s == Subcommand::kRunEnsemble || s == Subcommand::kRunEpsgreedy;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

using DefaultFn = std::function<std::string(Subcommand, const std::string& env)>;

struct KeySpec {
  std::string name;
  DefaultFn def;
};

DefaultFn constant(std::string v) {
  return [v](Subcommand, const std::string&) { return v; };
}

DefaultFn by_env(std::string deep_sea, std::string cartpole) {
  return [deep_sea, cartpole](Subcommand, const std::string& env) { return env == "cartpole" ? cartpole : deep_sea; };
}

const std::vector<KeySpec>& key_specs() {
  static const std::vector<KeySpec> specs = {
      {"env", [](Subcommand s, const std::string&) { return std::string(s == Subcommand::kRegret ? "dirichlet" : "deep-sea"); }},
      {"size", constant("10")},
      {"episodes",
       [](Subcommand s, const std::string& env) -> std::string {
         switch (s) {
           case Subcommand::kRunTabular: return "500";
           case Subcommand::kRegret: return "2000";
           case Subcommand::kOptimismCheck:
           case Subcommand::kGradcheck: return "0";
           default: return env == "cartpole" ? "3000" : "6000";
         }
       }},
      {"seeds", constant("1,2,3,4,5")},
      {"output", [](Subcommand s, const std::string&) { return std::string(subcommand_name(s)) + ".csv"; }},
      {"threads", constant("1")},
      {"record_time", constant("false")},
      {"mean_hidden", by_env("300", "50,50,50")},
      {"unc_hidden", by_env("512", "50,50,50")},
      {"heads", by_env("10", "2")},
      {"beta1", constant("2")},
      {"beta2", constant("2")},
      {"sigma", constant("2")},
      {"sigma_final", by_env("2", "1")},
      {"gamma", by_env("1", "0.99")},
      {"batch_size", constant("64")},
      {"n_batches", by_env("10", "100")},
      {"lr", constant("0.001")},
      {"target_period", constant("10")},
      {"selector", constant("abar")},
      {"buffer_capacity", constant("0")},
      {"members", constant("5")},
      {"prior_scale", by_env("10", "30")},
      {"ens_hidden", by_env("50", "50,50,50")},
      {"epsilon", constant("0.1")},
      {"dqn_hidden", by_env("50", "50,50,50")},
      {"preset", constant("regret")},
      {"wtd_beta", constant("3")},
      {"wtd_sigma", constant("1")},
      {"wtd_sigma0", constant("1")},
      {"wtd_theta_bar", constant("0")},
      {"horizon", constant("4")},
      {"states", constant("4")},
      {"actions", constant("2")},
      {"mdps", constant("200")},
      {"allow_non_preset", constant("false")},
      {"prior_kind", constant("uniform")},
      {"cases", constant("20")},
      {"samples", constant("100000")},
      {"outcomes", constant("4")},
      {"nets", constant("10")},
  };
  return specs;
}

std::string normalize_key(std::string key) {
  std::replace(key.begin(), key.end(), '-', '_');
  return key;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& why) {
  fail(ErrorCode::kUsage, "invalid value for '" + key + "': '" + value + "' (" + why + ")");
}

long long parse_int(const std::string& key, const std::string& v, long long lo, long long hi) {
  errno = 0;
  char* end = nullptr;
  const long long out = std::strtoll(v.c_str(), &end, 10);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE) bad_value(key, v, "expected an integer");
  if (out < lo || out > hi) {
    bad_value(key, v, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  }
  return out;
}

double parse_real(const std::string& key, const std::string& v, double lo, double hi) {
  errno = 0;
  char* end = nullptr;
  const double out = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(out)) {
    bad_value(key, v, "expected a real number");
  }
  if (out < lo || out > hi) bad_value(key, v, "out of range");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v, "expected true or false");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::vector<int> parse_layers(const std::string& key, const std::string& v) {
  std::vector<int> out;
  for (const auto& item : split_list(v)) out.push_back(static_cast<int>(parse_int(key, item, 1, 1 << 16)));
  if (out.empty()) bad_value(key, v, "expected a comma-separated list of layer sizes");
  return out;
}

}  // namespace

const char* subcommand_name(Subcommand s) {
  for (const auto& e : kSubcommands) {
    if (e.sub == s) return e.name;
  }
  return "unknown";
}

Subcommand parse_subcommand(const std::string& name) {
  for (const auto& e : kSubcommands) {
    if (name == e.name) return e.sub;
  }
  std::string list;
  for (const auto& e : kSubcommands) list += std::string(list.empty() ? "" : ", ") + e.name;
  fail(ErrorCode::kUsage, "unknown subcommand '" + name + "' (expected one of " + list + ")");
}

const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& s : key_specs()) k.push_back(s.name);
    return k;
  }();
  return keys;
}

ConfigValues parse_config_text(const std::string& text, const std::string& origin) {
  ConfigValues out;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::kUsage, origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    out[normalize_key(trim(line.substr(0, eq)))] = trim(line.substr(eq + 1));
  }
  return out;
}

ConfigValues read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

ExperimentConfig resolve_config(Subcommand subcommand, const ConfigValues& values) {
  for (const auto& [key, value] : values) {
    const auto& keys = known_config_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      fail(ErrorCode::kUsage, "unknown config key '" + key + "'");
    }
  }
  ExperimentConfig c;
  c.subcommand = subcommand;
  const auto env_it = values.find("env");
  const std::string env = env_it != values.end() ? env_it->second : key_specs().front().def(subcommand, "");
  for (const auto& spec : key_specs()) {
    const auto it = values.find(spec.name);
    c.resolved[spec.name] = it != values.end() ? it->second : spec.def(subcommand, env);
  }
  const auto& r = c.resolved;
  auto get = [&r](const char* k) -> const std::string& { return r.at(k); };
  auto i32 = [&](const char* k, long long lo, long long hi = 1LL << 31) {
    return static_cast<int>(parse_int(k, get(k), lo, std::min<long long>(hi, (1LL << 31) - 1)));
  };
  auto real = [&](const char* k, double lo, double hi = kInf) { return parse_real(k, get(k), lo, hi); };

  c.env = env;
  if (is_deep_run(subcommand) && env != "deep-sea" && env != "cartpole") {
    bad_value("env", env, "expected deep-sea or cartpole");
  }
  if (subcommand == Subcommand::kRunTabular && env != "deep-sea" && env != "dirichlet") {
    bad_value("env", env, "expected deep-sea or dirichlet");
  }
  c.size = i32("size", 1, 4096);
  c.episodes = i32("episodes", 0);
  for (const auto& item : split_list(get("seeds"))) {
    c.seeds.push_back(static_cast<std::uint64_t>(parse_int("seeds", item, 0, std::numeric_limits<long long>::max())));
  }
  if (c.seeds.empty()) bad_value("seeds", get("seeds"), "need at least one seed");
  std::stable_sort(c.seeds.begin(), c.seeds.end());
  c.output = get("output");
  if (c.output.empty()) bad_value("output", c.output, "empty path");
  c.threads = i32("threads", 1, 1024);
  c.record_time = parse_bool("record_time", get("record_time"));

  PinsConfig& p = c.pins;
  p.mean_hidden = parse_layers("mean_hidden", get("mean_hidden"));
  p.uncertainty_hidden = parse_layers("unc_hidden", get("unc_hidden"));
  p.heads = i32("heads", 1, 4096);
  p.beta1 = real("beta1", 0.0);
  p.beta2 = real("beta2", 0.0);
  p.sigma_initial = real("sigma", 0.0);
  p.sigma_final = real("sigma_final", 0.0);
  p.decay_episodes = std::max(1, c.episodes);
  p.gamma = real("gamma", 0.0, 1.0);
  if (p.gamma == 0.0) bad_value("gamma", get("gamma"), "must be > 0");
  p.batch_size = i32("batch_size", 1);
  p.n_batches = i32("n_batches", 0);
  p.learning_rate = real("lr", 0.0);
  if (p.learning_rate == 0.0) bad_value("lr", get("lr"), "must be > 0");
  p.target_period = i32("target_period", 1);
  const std::string& sel = get("selector");
  if (sel == "abar") {
    p.selector = TargetSelector::kMean;
  } else if (sel == "atilde") {
    p.selector = TargetSelector::kSampled;
  } else {
    bad_value("selector", sel, "expected abar or atilde");
  }
  p.buffer_capacity = static_cast<size_t>(parse_int("buffer_capacity", get("buffer_capacity"), 0,
                                                    std::numeric_limits<long long>::max()));

  EnsembleConfig& e = c.ensemble;
  e.members = i32("members", 1, 1024);
  e.hidden = parse_layers("ens_hidden", get("ens_hidden"));
  e.prior_scale = real("prior_scale", 0.0);
  e.gamma = p.gamma;
  e.batch_size = p.batch_size;
  e.n_batches = p.n_batches;
  e.learning_rate = p.learning_rate;
  e.target_period = p.target_period;
  e.buffer_capacity = p.buffer_capacity;

  DqnConfig& d = c.dqn;
  d.hidden = parse_layers("dqn_hidden", get("dqn_hidden"));
  d.epsilon = real("epsilon", 0.0, 1.0);
  d.gamma = p.gamma;
  d.batch_size = p.batch_size;
  d.n_batches = p.n_batches;
  d.learning_rate = p.learning_rate;
  d.target_period = p.target_period;
  d.buffer_capacity = p.buffer_capacity;

  c.horizon = i32("horizon", 1, 1000);
  c.states = i32("states", 1, 1000);
  c.actions = i32("actions", 1, 1000);
  c.mdps = i32("mdps", 1);
  c.allow_non_preset = parse_bool("allow_non_preset", get("allow_non_preset"));
  c.prior_beta = real("wtd_beta", 0.0);
  if (c.prior_beta == 0.0) bad_value("wtd_beta", get("wtd_beta"), "must be > 0");
  const std::string& kind = get("prior_kind");
  if (kind != "uniform" && kind != "random") bad_value("prior_kind", kind, "expected uniform or random");
  c.random_prior = kind == "random";
  const std::string& preset = get("preset");
  const int preset_horizon = subcommand == Subcommand::kRunTabular && env == "deep-sea" ? c.size : c.horizon;
  if (preset == "regret") {
    c.wtd = WtdParams::regret_preset(preset_horizon, c.prior_beta);
  } else if (preset == "custom") {
    c.wtd.sigma = real("wtd_sigma", 0.0);
    c.wtd.sigma0 = real("wtd_sigma0", 0.0);
    c.wtd.theta_bar = real("wtd_theta_bar", -kInf);
    if (c.wtd.sigma == 0.0 || c.wtd.sigma0 == 0.0) bad_value("wtd_sigma", get("wtd_sigma"), "scales must be > 0");
  } else {
    bad_value("preset", preset, "expected regret or custom");
  }

  c.cases = i32("cases", 1);
  c.samples = i32("samples", 10000);
  c.outcomes = i32("outcomes", 1, 1 << 16);
  c.nets = i32("nets", 1, 10000);

  try {
    c.pins.validate();
    c.ensemble.validate();
    c.dqn.validate();
    c.wtd.validate();
  } catch (const Error& err) {
    fail(ErrorCode::kUsage, err.what());
  }
  return c;
}

ConfigValues collect_config_values(const std::vector<std::string>& args, Subcommand& sub) {
  if (args.empty()) fail(ErrorCode::kUsage, "missing subcommand");
  sub = parse_subcommand(args[0]);
  ConfigValues flags;
  std::string config_file;
  for (size_t i = 1; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a.rfind("--", 0) != 0 || a.size() == 2) fail(ErrorCode::kUsage, "unexpected argument '" + a + "'");
    std::string key = a.substr(2);
    std::string value;
    const auto eq = key.find('=');
    if (eq != std::string::npos) {
      value = key.substr(eq + 1);
      key.resize(eq);
    } else {
      if (i + 1 >= args.size()) fail(ErrorCode::kUsage, "flag '--" + key + "' needs a value");
      value = args[++i];
    }
    key = normalize_key(key);
    if (key == "config") {
      config_file = value;
    } else {
      flags[key] = value;
    }
  }
  ConfigValues merged = config_file.empty() ? ConfigValues{} : read_config_file(config_file);
  for (const auto& [k, v] : flags) merged[k] = v;
  return merged;
}

ExperimentConfig parse_config(const std::vector<std::string>& args) {
  Subcommand sub = Subcommand::kRunPins;
  const ConfigValues values = collect_config_values(args, sub);
  return resolve_config(sub, values);
}

std::vector<double> smooth_max_100(std::span<const double> rewards) {
  constexpr size_t kWindow = 100;
  std::vector<double> out(rewards.size());
  std::deque<size_t> window;  // indices with decreasing rewards
  for (size_t i = 0; i < rewards.size(); ++i) {
    while (!window.empty() && rewards[window.back()] <= rewards[i]) window.pop_back();
    window.push_back(i);
    if (window.front() + kWindow <= i) window.pop_front();
    out[i] = rewards[window.front()];
  }
  return out;
}

bool detect_optimal_deep_sea(std::span<const double> rewards, int size) {
  constexpr size_t kTail = 100;
  if (rewards.size() < kTail) {
    fail(ErrorCode::kInsufficientData,
         "need at least 100 episodes to judge a run, got " + std::to_string(rewards.size()));
  }
  double sum = 0.0;
  for (size_t i = rewards.size() - kTail; i < rewards.size(); ++i) sum += rewards[i];
  return sum / static_cast<double>(kTail) >= 0.9 * deep_sea_optimal_return(size);
}

std::vector<MetricRow> metric_rows(std::uint64_t seed, std::span<const double> rewards, std::span<const double> ms) {
  const std::vector<double> smooth = smooth_max_100(rewards);
  std::vector<MetricRow> rows(rewards.size());
  double cum = 0.0;
  for (size_t i = 0; i < rewards.size(); ++i) {
    cum += rewards[i];
    rows[i] = {seed, static_cast<int>(i + 1), rewards[i], cum, smooth[i], i < ms.size() ? ms[i] : 0.0};
  }
  return rows;
}

bool detect_optimal_deep_sea(std::span<const MetricRow> rows, int size) {
  std::vector<double> rewards;
  rewards.reserve(rows.size());
  for (const auto& r : rows) rewards.push_back(r.reward);
  return detect_optimal_deep_sea(rewards, size);
}

namespace {

template <class EpisodeFn>
SeedRun timed_episodes(std::uint64_t seed, int episodes, bool record_time, EpisodeFn&& episode) {
  SeedRun run;
  run.seed = seed;
  run.rewards.reserve(static_cast<size_t>(episodes));
  run.ms.reserve(static_cast<size_t>(episodes));
  for (int l = 0; l < episodes; ++l) {
    const auto t0 = std::chrono::steady_clock::now();
    run.rewards.push_back(episode());
    const auto t1 = std::chrono::steady_clock::now();
    run.ms.push_back(record_time ? std::chrono::duration<double, std::milli>(t1 - t0).count() : 0.0);
  }
  return run;
}

std::unique_ptr<Environment> make_deep_env(const ExperimentConfig& c, std::uint64_t seed) {
  if (c.env == "cartpole") return std::make_unique<CartpoleSwingupEnv>(seed);
  return std::make_unique<DeepSeaEnv>(c.size, seed);
}

DirichletPrior make_prior(const ExperimentConfig& c, std::uint64_t seed) {
  if (!c.random_prior) return DirichletPrior::uniform(c.horizon, c.states, c.actions, c.prior_beta);
  RngStream rng(seed, streams::kMdpSampling + 1);
  return DirichletPrior::random(c.horizon, c.states, c.actions, c.prior_beta, rng);
}

double tabular_episode(TabularEnv& env, WtdLearner& learner, RngStream& index_rng) {
  WtdRun run = run_wtd(env, learner, 1, index_rng);
  return transcript_return(run.transcripts.front(), 1.0);
}

}  // namespace

SeedRun run_seed(const ExperimentConfig& c, std::uint64_t seed) {
  switch (c.subcommand) {
    case Subcommand::kRunTabular: {
      RngStream index_rng(seed, streams::kIndexSampling);
      if (c.env == "deep-sea") {
        DeepSeaTabularEnv env(DeepSeaEnv(c.size, seed));
        WtdLearner learner({env.horizon(), env.num_states(), env.num_actions()}, c.wtd);
        return timed_episodes(seed, c.episodes, c.record_time, [&] { return tabular_episode(env, learner, index_rng); });
      }
      const DirichletPrior prior = make_prior(c, seed);
      RngStream mdp_rng(seed, streams::kMdpSampling);
      const TabularMDP mdp = dirichlet_mdp_sample(prior, mdp_rng);
      MdpEnv env(mdp, seed);
      WtdLearner learner({c.horizon, c.states, c.actions}, c.wtd);
      return timed_episodes(seed, c.episodes, c.record_time, [&] { return tabular_episode(env, learner, index_rng); });
    }
    case Subcommand::kRunPins: {
      auto env = make_deep_env(c, seed);
      PinsAgent agent(env->observation_size(), env->num_actions(), c.pins, seed);
      return timed_episodes(seed, c.episodes, c.record_time, [&] { return agent.run_episode(*env); });
    }
    case Subcommand::kRunEnsemble: {
      auto env = make_deep_env(c, seed);
      EnsembleAgent agent(env->observation_size(), env->num_actions(), c.ensemble, seed);
      return timed_episodes(seed, c.episodes, c.record_time, [&] { return agent.run_episode(*env); });
    }
    case Subcommand::kRunEpsgreedy: {
      auto env = make_deep_env(c, seed);
      DqnAgent agent(env->observation_size(), env->num_actions(), c.dqn, seed);
      return timed_episodes(seed, c.episodes, c.record_time, [&] { return agent.run_episode(*env); });
    }
    default:
      fail(ErrorCode::kUsage, std::string(subcommand_name(c.subcommand)) + " is not a per-seed run");
  }
}

std::vector<SeedRun> run_seeds(const ExperimentConfig& c) {
  std::vector<SeedRun> out(c.seeds.size());
  std::vector<std::exception_ptr> errors(c.seeds.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i = next++; i < c.seeds.size(); i = next++) {
      try {
        out[i] = run_seed(c, c.seeds[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const size_t n_threads = std::min<size_t>(static_cast<size_t>(c.threads), c.seeds.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

std::string format_double(double v) {
  if (v == 0.0) return "0";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string metrics_csv(std::span<const MetricRow> rows) {
  std::string out = "seed,episode,reward,cum_reward,smoothed_reward,ms\n";
  for (const auto& r : rows) {
    out += std::to_string(r.seed) + "," + std::to_string(r.episode) + "," + format_double(r.reward) + "," +
           format_double(r.cum_reward) + "," + format_double(r.smoothed_reward) + "," + format_double(r.ms) + "\n";
  }
  return out;
}

std::string metadata_line(const ExperimentConfig& c) {
  std::string line = std::string("pinslab_version=") + version_string() + " subcommand=" + subcommand_name(c.subcommand);
  for (const auto& [k, v] : c.resolved) line += " " + k + "=" + v;
  return line + "\n";
}

std::vector<GradcheckResult> run_gradcheck(int nets, std::uint64_t seed) {
  RngStream rng(seed, streams::kNetworkInit);
  std::vector<GradcheckResult> out;
  constexpr double kStep = 1e-5;
  for (int k = 0; k < nets; ++k) {
    MlpShape shape;
    shape.input = 1 + rng.uniform_int(6);
    const int depth = 1 + rng.uniform_int(2);
    for (int d = 0; d < depth; ++d) shape.hidden.push_back(2 + rng.uniform_int(7));
    shape.output = 1 + rng.uniform_int(3);
    shape.heads = k == 0 ? 3 : 1 + rng.uniform_int(3);
    shape.activation = k % 2 == 0 ? OutputActivation::kSoftplus : OutputActivation::kLinear;
    Mlp net = Mlp::init(shape, rng);
    for (auto& b : net.mutable_params().biases) {
      for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = rng.uniform(-0.5, 0.5);
    }
    const int batch = 1 + rng.uniform_int(5);
    Eigen::MatrixXd inputs(shape.input, batch);
    for (Eigen::Index i = 0; i < inputs.size(); ++i) inputs.data()[i] = rng.normal();
    Eigen::MatrixXd probe(shape.total_outputs(), batch);
    for (Eigen::Index i = 0; i < probe.size(); ++i) probe.data()[i] = rng.normal();

    auto loss = [&](const Mlp& m) { return (m.forward_batch(inputs).array() * probe.array()).sum() / batch; };
    const MlpParams grads = backprop(net, inputs, probe);
    double worst = 0.0;
    auto check = [&](double& param, double analytic) {
      const double saved = param;
      param = saved + kStep;
      const double up = loss(net);
      param = saved - kStep;
      const double down = loss(net);
      param = saved;
      const double fd = (up - down) / (2.0 * kStep);
      const double denom = std::max({std::abs(analytic), std::abs(fd), 1e-6});
      worst = std::max(worst, std::abs(analytic - fd) / denom);
    };
    MlpParams& p = net.mutable_params();
    for (size_t layer = 0; layer < p.weights.size(); ++layer) {
      for (Eigen::Index i = 0; i < p.weights[layer].size(); ++i) {
        check(p.weights[layer].data()[i], grads.weights[layer].data()[i]);
      }
      for (Eigen::Index i = 0; i < p.biases[layer].size(); ++i) check(p.biases[layer][i], grads.biases[layer][i]);
    }
    out.push_back({k, worst, shape.parameter_count()});
  }
  return out;
}

std::string experiment_csv(const ExperimentConfig& c) {
  switch (c.subcommand) {
    case Subcommand::kRegret: {
      RegretOptions opts;
      opts.allow_non_preset = c.allow_non_preset;
      opts.threads = c.threads;
      const DirichletPrior prior = make_prior(c, c.seeds.front());
      const RegretReport rep = bayes_regret_mc(prior, c.wtd, c.episodes, c.mdps, c.seeds.front(), opts);
      std::string out = "episode,mean_regret,se_regret,mean_cum_regret,se_cum_regret,bound\n";
      const std::string bound = format_double(rep.bound);
      for (int l = 0; l < rep.episodes; ++l) {
        const size_t sl = static_cast<size_t>(l);
        out += std::to_string(l + 1) + "," + format_double(rep.per_episode_mean[sl]) + "," +
               format_double(rep.per_episode_se[sl]) + "," + format_double(rep.cumulative_mean[sl]) + "," +
               format_double(rep.cumulative_se[sl]) + "," + bound + "\n";
      }
      return out;
    }
    case Subcommand::kOptimismCheck: {
      RngStream rng(c.seeds.front(), streams::kOptimism);
      std::string out = "case,function,margin,std_error,z_score\n";
      const int span = std::max(1, c.outcomes - 1);
      for (int k = 0; k < c.cases; ++k) {
        const OptimismCase oc = random_optimism_case(2 + k % span, k % 2 == 0, rng);
        for (const auto& m : optimism_mc_check(oc, c.samples, rng)) {
          const double z = m.std_error > 0.0 ? m.margin / m.std_error : 0.0;
          out += std::to_string(k) + "," + m.function + "," + format_double(m.margin) + "," +
                 format_double(m.std_error) + "," + format_double(z) + "\n";
        }
      }
      return out;
    }
    case Subcommand::kGradcheck: {
      std::string out = "net,max_rel_error,params\n";
      for (const auto& g : run_gradcheck(c.nets, c.seeds.front())) {
        out += std::to_string(g.net) + "," + format_double(g.max_rel_error) + "," + std::to_string(g.params) + "\n";
      }
      return out;
    }
    default: {
      std::vector<MetricRow> rows;
      for (const SeedRun& run : run_seeds(c)) {
        const auto r = metric_rows(run.seed, run.rewards, run.ms);
        rows.insert(rows.end(), r.begin(), r.end());
      }
      return metrics_csv(rows);
    }
  }
}

std::string output_path(const ExperimentConfig& c) {
  const char* dir = std::getenv("PINSLAB_OUT_DIR");
  if (dir == nullptr || *dir == '\0') return c.output;
  return (std::filesystem::path(dir) / std::filesystem::path(c.output).filename()).string();
}

std::string run_experiment(const ExperimentConfig& c) {
  const std::string csv = experiment_csv(c);
  const std::string path = output_path(c);
  const std::filesystem::path parent = std::filesystem::path(path).parent_path();
  std::error_code ec;
  if (!parent.empty()) std::filesystem::create_directories(parent, ec);
  auto write = [](const std::string& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::kIo, "cannot open " + p + " for writing");
    out << text;
    out.close();
    if (!out) fail(ErrorCode::kIo, "failed writing " + p);
  };
  write(path, csv);
  write(path + ".meta", metadata_line(c));
  return path;
}

}  // namespace pinslab
