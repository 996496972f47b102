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

#include "pinslab/error.hpp"

namespace pinslab {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kOk: return "ok";
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kDomain: return "domain";
    case ErrorCode::kShape: return "shape";
    case ErrorCode::kEpisodeFinished: return "episode-finished";
    case ErrorCode::kConfig: return "configuration";
    case ErrorCode::kUsage: return "usage";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kPrecondition: return "precondition";
    case ErrorCode::kFrozenParameter: return "frozen-parameter";
    case ErrorCode::kIndex: return "index";
    case ErrorCode::kInsufficientData: return "insufficient-data";
    case ErrorCode::kNoAction: return "no-action";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kInternal: return "internal";
  }
  return "unknown";
}

void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace pinslab
