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

#ifndef PINSLAB_ERROR_HPP_
#define PINSLAB_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace pinslab {

// Mirrors pinslab_status in the C header; values must stay in sync.
enum class ErrorCode : int {
  kOk = 0,
  kInvalidArgument = 1,
  kDomain = 2,
  kShape = 3,
  kEpisodeFinished = 4,
  kConfig = 5,
  kUsage = 6,
  kIo = 7,
  kPrecondition = 8,
  kFrozenParameter = 9,
  kIndex = 10,
  kInsufficientData = 11,
  kNoAction = 12,
  kFormat = 13,
  kInternal = 99,
};

const char* error_code_name(ErrorCode code);

// Every failure raised by the core library carries one of the codes above so
// the C boundary can translate it without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& what);

}  // namespace pinslab

#endif  // PINSLAB_ERROR_HPP_
