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

// Command-line front end; talks to the library only through the C interface.
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "pinslab/pinslab.h"

namespace {

constexpr const char* kUsage =
    "usage: pinslab <subcommand> [--key value | --key=value]... [--config file]\n"
    "\n"
    "subcommands:\n"
    "  run-tabular     tabular Wasserstein-TD agent (env deep-sea | dirichlet)\n"
    "  run-pins        indexed-network agent (env deep-sea | cartpole)\n"
    "  run-ensemble    bootstrapped ensemble with additive priors (prior_scale 0 drops them)\n"
    "  run-epsgreedy   epsilon-greedy deep-Q baseline\n"
    "  regret          Monte-Carlo Bayes regret of the tabular agent against its bound\n"
    "  optimism-check  Monte-Carlo stochastic-optimism margins\n"
    "  gradcheck       backprop vs central finite differences on random networks\n"
    "\n"
    "Common keys: env, size, episodes, seeds (comma list), output, threads, record_time.\n"
    "Config files hold flat 'key = value' lines; flags override them.\n"
    "PINSLAB_OUT_DIR, when set, redirects the output file into that directory.\n";

int fail_with(pinslab_status st) {
  std::fprintf(stderr, "pinslab: %s: %s\n", pinslab_status_name(st), pinslab_last_error());
  return st == PINSLAB_USAGE ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2 || std::strcmp(argv[1], "--help") == 0 || std::strcmp(argv[1], "-h") == 0) {
    std::fputs(kUsage, argc < 2 ? stderr : stdout);
    return argc < 2 ? 2 : 0;
  }
  if (std::strcmp(argv[1], "--version") == 0) {
    std::printf("pinslab %s\n", pinslab_version());
    return 0;
  }

  std::vector<const char*> args(argv + 1, argv + argc);
  pinslab_config* config = nullptr;
  pinslab_status st = pinslab_config_from_args(static_cast<int>(args.size()), args.data(), &config);
  if (st != PINSLAB_OK) {
    const int code = fail_with(st);
    if (st == PINSLAB_USAGE) std::fputs("run 'pinslab --help' for usage\n", stderr);
    return code;
  }

  size_t needed = 0;
  std::string path(4096, '\0');
  st = pinslab_run_experiment(config, path.data(), path.size(), &needed);
  pinslab_config_destroy(config);
  if (st != PINSLAB_OK) return fail_with(st);
  path.resize(needed - 1);
  std::printf("%s\n", path.c_str());
  return 0;
}
