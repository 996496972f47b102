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

#ifndef PINSLAB_MDP_HPP_
#define PINSLAB_MDP_HPP_

#include <Eigen/Dense>
#include <vector>

namespace pinslab {

// State of a time-inhomogeneous episodic MDP. h == horizon marks the
// absorbing terminal state, which carries no actions and zero value.
struct StateId {
  int h = 0;
  int x = 0;
  bool operator==(const StateId&) const = default;
};

struct Outcome {
  double r = 0.0;
  int x_next = 0;
  bool operator==(const Outcome&) const = default;
};

struct TranscriptStep {
  StateId state;
  int action = 0;
  double reward = 0.0;
  StateId next_state;
  bool done = false;
};

struct EpisodeTranscript {
  int episode = 0;
  std::vector<TranscriptStep> steps;
};

// Sum of gamma^k r_k over the steps.
double transcript_return(const EpisodeTranscript& t, double gamma);

// Tabular interaction surface: the environment tracks its own state and
// reports outcomes (r, x') for the factor state at the next timestep.
class TabularEnv {
 public:
  virtual ~TabularEnv() = default;
  virtual int horizon() const = 0;
  virtual int num_states() const = 0;
  virtual int num_actions() const = 0;
  virtual StateId reset() = 0;
  virtual Outcome step(int action) = 0;
};

struct StepResult {
  Eigen::VectorXd observation;
  double reward = 0.0;
  bool done = false;
};

// Observation-vector interaction surface used by the network agents.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual int observation_size() const = 0;
  virtual int num_actions() const = 0;
  virtual Eigen::VectorXd reset() = 0;
  virtual StepResult step(int action) = 0;
  virtual bool done() const = 0;
};

}  // namespace pinslab

#endif  // PINSLAB_MDP_HPP_
