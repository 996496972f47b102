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

#include "pinslab/pinslab.h"

#include <cstring>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "pinslab/environments.hpp"
#include "pinslab/error.hpp"
#include "pinslab/harness.hpp"
#include "pinslab/pins.hpp"
#include "pinslab/regret.hpp"
#include "pinslab/wtd.hpp"

using pinslab::ErrorCode;

static_assert(static_cast<int>(ErrorCode::kInvalidArgument) == PINSLAB_INVALID_ARGUMENT);
static_assert(static_cast<int>(ErrorCode::kFormat) == PINSLAB_FORMAT);
static_assert(static_cast<int>(ErrorCode::kInternal) == PINSLAB_INTERNAL);

struct pinslab_config {
  pinslab::Subcommand subcommand;
  pinslab::ConfigValues values;
  pinslab::ExperimentConfig resolved;
};

struct pinslab_env {
  std::unique_ptr<pinslab::Environment> env;
};

struct pinslab_pins_agent {
  std::unique_ptr<pinslab::PinsAgent> agent;
};

namespace {

thread_local std::string g_last_error;
thread_local std::string g_csv_cache;

pinslab_status set_error(pinslab_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

template <class Fn>
pinslab_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    return fn();
  } catch (const pinslab::Error& e) {
    return set_error(static_cast<pinslab_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(PINSLAB_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(PINSLAB_INTERNAL, e.what());
  } catch (...) {
    return set_error(PINSLAB_INTERNAL, "unknown failure");
  }
}

pinslab_status null_arg(const char* name) {
  return set_error(PINSLAB_INVALID_ARGUMENT, std::string(name) + " must not be null");
}

pinslab_status copy_out(const std::string& text, char* buf, size_t len, size_t* needed) {
  if (needed != nullptr) *needed = text.size() + 1;
  if (buf == nullptr) return PINSLAB_OK;
  if (len < text.size() + 1) return set_error(PINSLAB_BUFFER_TOO_SMALL, "output buffer too small");
  std::memcpy(buf, text.c_str(), text.size() + 1);
  return PINSLAB_OK;
}

pinslab_status copy_observation(const Eigen::VectorXd& obs, double* out, size_t len) {
  if (out == nullptr) return PINSLAB_OK;
  if (len < static_cast<size_t>(obs.size())) return set_error(PINSLAB_SHAPE, "observation buffer too small");
  std::memcpy(out, obs.data(), sizeof(double) * static_cast<size_t>(obs.size()));
  return PINSLAB_OK;
}

}  // namespace

extern "C" {

const char* pinslab_version(void) { return pinslab::version_string(); }

const char* pinslab_last_error(void) { return g_last_error.c_str(); }

const char* pinslab_status_name(pinslab_status status) {
  if (status == PINSLAB_BUFFER_TOO_SMALL) return "buffer-too-small";
  return pinslab::error_code_name(static_cast<ErrorCode>(status));
}

pinslab_status pinslab_config_from_args(int argc, const char* const* argv, pinslab_config** out) {
  if (out == nullptr) return null_arg("out");
  if (argc > 0 && argv == nullptr) return null_arg("argv");
  return guarded([&] {
    std::vector<std::string> args(argv, argv + argc);
    auto cfg = std::make_unique<pinslab_config>();
    cfg->values = pinslab::collect_config_values(args, cfg->subcommand);
    cfg->resolved = pinslab::resolve_config(cfg->subcommand, cfg->values);
    *out = cfg.release();
    return PINSLAB_OK;
  });
}

pinslab_status pinslab_config_set(pinslab_config* config, const char* key, const char* value) {
  if (config == nullptr) return null_arg("config");
  if (key == nullptr || value == nullptr) return null_arg("key/value");
  return guarded([&] {
    std::string k(key);
    for (char& c : k) c = c == '-' ? '_' : c;
    pinslab::ConfigValues next = config->values;
    next[k] = value;
    pinslab::ExperimentConfig resolved = pinslab::resolve_config(config->subcommand, next);
    config->values = std::move(next);
    config->resolved = std::move(resolved);
    return PINSLAB_OK;
  });
}

pinslab_status pinslab_config_get(const pinslab_config* config, const char* key, char* buf, size_t len,
                                  size_t* needed) {
  if (config == nullptr || key == nullptr) return null_arg("config/key");
  return guarded([&] {
    std::string k(key);
    for (char& c : k) c = c == '-' ? '_' : c;
    const auto it = config->resolved.resolved.find(k);
    if (it == config->resolved.resolved.end()) pinslab::fail(ErrorCode::kUsage, "unknown config key '" + k + "'");
    return copy_out(it->second, buf, len, needed);
  });
}

void pinslab_config_destroy(pinslab_config* config) { delete config; }

pinslab_status pinslab_run_experiment(const pinslab_config* config, char* path_buf, size_t len, size_t* needed) {
  if (config == nullptr) return null_arg("config");
  return guarded([&] { return copy_out(pinslab::run_experiment(config->resolved), path_buf, len, needed); });
}

pinslab_status pinslab_experiment_csv(const pinslab_config* config, char* buf, size_t len, size_t* needed) {
  if (config == nullptr) return null_arg("config");
  return guarded([&] {
    if (buf == nullptr || g_csv_cache.empty()) g_csv_cache = pinslab::experiment_csv(config->resolved);
    const pinslab_status st = copy_out(g_csv_cache, buf, len, needed);
    if (buf != nullptr && st == PINSLAB_OK) g_csv_cache.clear();
    return st;
  });
}

pinslab_status pinslab_deep_sea_create(int size, uint64_t seed, pinslab_env** out) {
  if (out == nullptr) return null_arg("out");
  return guarded([&] {
    auto env = std::make_unique<pinslab_env>();
    env->env = std::make_unique<pinslab::DeepSeaEnv>(size, seed);
    *out = env.release();
    return PINSLAB_OK;
  });
}

pinslab_status pinslab_cartpole_create(uint64_t seed, pinslab_env** out) {
  if (out == nullptr) return null_arg("out");
  return guarded([&] {
    auto env = std::make_unique<pinslab_env>();
    env->env = std::make_unique<pinslab::CartpoleSwingupEnv>(seed);
    *out = env.release();
    return PINSLAB_OK;
  });
}

pinslab_status pinslab_env_observation_size(const pinslab_env* env, int* out) {
  if (env == nullptr || out == nullptr) return null_arg("env/out");
  *out = env->env->observation_size();
  return PINSLAB_OK;
}

pinslab_status pinslab_env_num_actions(const pinslab_env* env, int* out) {
  if (env == nullptr || out == nullptr) return null_arg("env/out");
  *out = env->env->num_actions();
  return PINSLAB_OK;
}

pinslab_status pinslab_env_reset(pinslab_env* env, double* observation, size_t len) {
  if (env == nullptr) return null_arg("env");
  return guarded([&] { return copy_observation(env->env->reset(), observation, len); });
}

pinslab_status pinslab_env_step(pinslab_env* env, int action, double* observation, size_t len, double* reward,
                                int* done) {
  if (env == nullptr) return null_arg("env");
  return guarded([&] {
    if (action < 0 || action >= env->env->num_actions()) pinslab::fail(ErrorCode::kIndex, "action out of range");
    if (observation != nullptr && len < static_cast<size_t>(env->env->observation_size())) {
      return set_error(PINSLAB_SHAPE, "observation buffer too small");
    }
    const pinslab::StepResult r = env->env->step(action);
    if (reward != nullptr) *reward = r.reward;
    if (done != nullptr) *done = r.done ? 1 : 0;
    return copy_observation(r.observation, observation, len);
  });
}

void pinslab_env_destroy(pinslab_env* env) { delete env; }

pinslab_status pinslab_pins_create(const pinslab_config* config, int observation_size, int num_actions,
                                   uint64_t seed, pinslab_pins_agent** out) {
  if (config == nullptr || out == nullptr) return null_arg("config/out");
  return guarded([&] {
    auto a = std::make_unique<pinslab_pins_agent>();
    a->agent = std::make_unique<pinslab::PinsAgent>(observation_size, num_actions, config->resolved.pins, seed);
    *out = a.release();
    return PINSLAB_OK;
  });
}

pinslab_status pinslab_pins_act(const pinslab_pins_agent* agent, const double* observation, size_t len, double z,
                                int head, int* action) {
  if (agent == nullptr || observation == nullptr || action == nullptr) return null_arg("agent/observation/action");
  return guarded([&] {
    if (len != static_cast<size_t>(agent->agent->observation_size())) {
      pinslab::fail(ErrorCode::kShape, "observation length does not match the agent");
    }
    const Eigen::VectorXd s = Eigen::Map<const Eigen::VectorXd>(observation, static_cast<Eigen::Index>(len));
    *action = agent->agent->act(s, z, head);
    return PINSLAB_OK;
  });
}

pinslab_status pinslab_pins_run_episode(pinslab_pins_agent* agent, pinslab_env* env, double* episode_return) {
  if (agent == nullptr || env == nullptr) return null_arg("agent/env");
  return guarded([&] {
    const double r = agent->agent->run_episode(*env->env);
    if (episode_return != nullptr) *episode_return = r;
    return PINSLAB_OK;
  });
}

pinslab_status pinslab_pins_prior_checksum(const pinslab_pins_agent* agent, uint64_t* out) {
  if (agent == nullptr || out == nullptr) return null_arg("agent/out");
  *out = agent->agent->prior_checksum();
  return PINSLAB_OK;
}

pinslab_status pinslab_pins_save(const pinslab_pins_agent* agent, const char* path) {
  if (agent == nullptr || path == nullptr) return null_arg("agent/path");
  return guarded([&] {
    agent->agent->save_file(path);
    return PINSLAB_OK;
  });
}

pinslab_status pinslab_pins_load(pinslab_pins_agent* agent, const char* path) {
  if (agent == nullptr || path == nullptr) return null_arg("agent/path");
  return guarded([&] {
    agent->agent->load_file(path);
    return PINSLAB_OK;
  });
}

void pinslab_pins_destroy(pinslab_pins_agent* agent) { delete agent; }

pinslab_status pinslab_w2_sq_gaussian(double mu1, double s1, double mu2, double s2, double* out) {
  if (out == nullptr) return null_arg("out");
  return guarded([&] {
    *out = pinslab::w2_sq_gaussian(mu1, s1, mu2, s2);
    return PINSLAB_OK;
  });
}

pinslab_status pinslab_regret_bound(int horizon, long episodes, int num_states, int num_actions, double beta,
                                      double* out) {
  if (out == nullptr) return null_arg("out");
  return guarded([&] {
    *out = pinslab::regret_bound(horizon, episodes, num_states, num_actions, beta);
    return PINSLAB_OK;
  });
}

pinslab_status pinslab_deep_sea_optimal_return(int size, double* out) {
  if (out == nullptr) return null_arg("out");
  return guarded([&] {
    if (size < 1) pinslab::fail(ErrorCode::kInvalidArgument, "deep-sea size must be >= 1");
    *out = pinslab::deep_sea_optimal_return(size);
    return PINSLAB_OK;
  });
}

pinslab_status pinslab_smooth_max_100(const double* rewards, size_t n, double* out) {
  if (n > 0 && (rewards == nullptr || out == nullptr)) return null_arg("rewards/out");
  return guarded([&] {
    const std::vector<double> s = pinslab::smooth_max_100({rewards, n});
    std::copy(s.begin(), s.end(), out);
    return PINSLAB_OK;
  });
}

}  // extern "C"
