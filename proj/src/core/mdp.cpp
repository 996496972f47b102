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

#include "pinslab/mdp.hpp"

namespace pinslab {

double transcript_return(const EpisodeTranscript& t, double gamma) {
  double total = 0.0;
  double discount = 1.0;
  for (const auto& step : t.steps) {
    total += discount * step.reward;
    discount *= gamma;
  }
  return total;
}

}  // namespace pinslab
