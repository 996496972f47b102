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

/* C interface to the pinslab library. All functions return a pinslab_status;
 * on failure pinslab_last_error() holds a thread-local message. */
#ifndef PINSLAB_PINSLAB_H_
#define PINSLAB_PINSLAB_H_

#include <stddef.h>
#include <stdint.h>

#if defined(PINSLAB_BUILDING_LIBRARY)
#define PINSLAB_API __attribute__((visibility("default")))
#else
#define PINSLAB_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pinslab_status {
  PINSLAB_OK = 0,
  PINSLAB_INVALID_ARGUMENT = 1,
  PINSLAB_DOMAIN = 2,
  PINSLAB_SHAPE = 3,
  PINSLAB_EPISODE_FINISHED = 4,
  PINSLAB_CONFIG = 5,
  PINSLAB_USAGE = 6,
  PINSLAB_IO = 7,
  PINSLAB_PRECONDITION = 8,
  PINSLAB_FROZEN_PARAMETER = 9,
  PINSLAB_INDEX = 10,
  PINSLAB_INSUFFICIENT_DATA = 11,
  PINSLAB_NO_ACTION = 12,
  PINSLAB_FORMAT = 13,
  PINSLAB_BUFFER_TOO_SMALL = 14,
  PINSLAB_INTERNAL = 99
} pinslab_status;

typedef struct pinslab_config pinslab_config;
typedef struct pinslab_env pinslab_env;
typedef struct pinslab_pins_agent pinslab_pins_agent;

PINSLAB_API const char* pinslab_version(void);
PINSLAB_API const char* pinslab_last_error(void);
PINSLAB_API const char* pinslab_status_name(pinslab_status status);

/* Experiment configuration. argv excludes the program name: the subcommand
 * comes first, followed by --key value, --key=value or --config file. */
PINSLAB_API pinslab_status pinslab_config_from_args(int argc, const char* const* argv, pinslab_config** out);
PINSLAB_API pinslab_status pinslab_config_set(pinslab_config* config, const char* key, const char* value);
/* Writes the resolved value; *needed receives the length including the NUL. */
PINSLAB_API pinslab_status pinslab_config_get(const pinslab_config* config, const char* key, char* buf, size_t len,
                                              size_t* needed);
PINSLAB_API void pinslab_config_destroy(pinslab_config* config);

/* Runs the configured subcommand and writes the CSV plus its .meta sidecar.
 * The written path is copied to path_buf when non-null. */
PINSLAB_API pinslab_status pinslab_run_experiment(const pinslab_config* config, char* path_buf, size_t len,
                                                  size_t* needed);
/* Produces the CSV text without touching the filesystem. Call with buf = NULL
 * to learn the size; the result is cached until the next call on this thread. */
PINSLAB_API pinslab_status pinslab_experiment_csv(const pinslab_config* config, char* buf, size_t len,
                                                  size_t* needed);

/* Environments. */
PINSLAB_API pinslab_status pinslab_deep_sea_create(int size, uint64_t seed, pinslab_env** out);
PINSLAB_API pinslab_status pinslab_cartpole_create(uint64_t seed, pinslab_env** out);
PINSLAB_API pinslab_status pinslab_env_observation_size(const pinslab_env* env, int* out);
PINSLAB_API pinslab_status pinslab_env_num_actions(const pinslab_env* env, int* out);
PINSLAB_API pinslab_status pinslab_env_reset(pinslab_env* env, double* observation, size_t len);
PINSLAB_API pinslab_status pinslab_env_step(pinslab_env* env, int action, double* observation, size_t len,
                                            double* reward, int* done);
PINSLAB_API void pinslab_env_destroy(pinslab_env* env);

/* PINs agent built from the pins-related keys of a run-pins config. */
PINSLAB_API pinslab_status pinslab_pins_create(const pinslab_config* config, int observation_size, int num_actions,
                                               uint64_t seed, pinslab_pins_agent** out);
PINSLAB_API pinslab_status pinslab_pins_act(const pinslab_pins_agent* agent, const double* observation, size_t len,
                                            double z, int head, int* action);
PINSLAB_API pinslab_status pinslab_pins_run_episode(pinslab_pins_agent* agent, pinslab_env* env,
                                                    double* episode_return);
PINSLAB_API pinslab_status pinslab_pins_prior_checksum(const pinslab_pins_agent* agent, uint64_t* out);
PINSLAB_API pinslab_status pinslab_pins_save(const pinslab_pins_agent* agent, const char* path);
PINSLAB_API pinslab_status pinslab_pins_load(pinslab_pins_agent* agent, const char* path);
PINSLAB_API void pinslab_pins_destroy(pinslab_pins_agent* agent);

/* Numeric helpers. */
PINSLAB_API pinslab_status pinslab_w2_sq_gaussian(double mu1, double s1, double mu2, double s2, double* out);
PINSLAB_API pinslab_status pinslab_regret_bound(int horizon, long episodes, int num_states, int num_actions,
                                                  double beta, double* out);
PINSLAB_API pinslab_status pinslab_deep_sea_optimal_return(int size, double* out);
PINSLAB_API pinslab_status pinslab_smooth_max_100(const double* rewards, size_t n, double* out);

#ifdef __cplusplus
}
#endif

#endif /* PINSLAB_PINSLAB_H_ */
