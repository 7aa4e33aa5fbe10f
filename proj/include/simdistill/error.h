// Copyright 2026 The simdistill Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SIMDISTILL_ERROR_H_
#define SIMDISTILL_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace simdistill {

enum class ErrorCode {
  kInvalidArgument,
  kTemplateError,
  kRenderError,
  kBackendUnreachable,
  kBackendError,
  kTimeout,
  kCapabilityError,
  kConfigError,
  kUnscorablePair,
  kWriteError,
  kReadError,
  kMalformedRecord,
  kNormalizationError,
  kMixError,
  kTooFewRows,
  kStageOrderError,
  kNoRunFound,
};

std::string_view ErrorCodeName(ErrorCode code);

// Single exception type for the library. `code` identifies the failure class;
// the optional integer `detail` carries an HTTP status, a line number or a
// record count depending on the code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, long detail = 0)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code),
        detail_(detail) {}

  ErrorCode code() const { return code_; }
  long detail() const { return detail_; }

 private:
  ErrorCode code_;
  long detail_;
};

inline std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kTemplateError: return "template-error";
    case ErrorCode::kRenderError: return "render-error";
    case ErrorCode::kBackendUnreachable: return "backend-unreachable";
    case ErrorCode::kBackendError: return "backend-error";
    case ErrorCode::kTimeout: return "timeout-error";
    case ErrorCode::kCapabilityError: return "capability-error";
    case ErrorCode::kConfigError: return "config-error";
    case ErrorCode::kUnscorablePair: return "unscorable-pair";
    case ErrorCode::kWriteError: return "write-error";
    case ErrorCode::kReadError: return "read-error";
    case ErrorCode::kMalformedRecord: return "malformed-record";
    case ErrorCode::kNormalizationError: return "normalization-error";
    case ErrorCode::kMixError: return "mix-error";
    case ErrorCode::kTooFewRows: return "too-few-rows";
    case ErrorCode::kStageOrderError: return "stage-order-error";
    case ErrorCode::kNoRunFound: return "no-run-found";
  }
  return "unknown-error";
}

}  // namespace simdistill

#endif  // SIMDISTILL_ERROR_H_
