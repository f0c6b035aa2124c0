// Copyright 2026 The kdalign Authors.
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

#include "kdalign/error.hpp"

namespace kdalign {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kBadTemperature: return "BadTemperature";
    case ErrorCode::kEmptyQueue: return "EmptyQueue";
    case ErrorCode::kBadConfig: return "BadConfig";
    case ErrorCode::kBadK: return "BadK";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kNonFiniteValue: return "NonFiniteValue";
    case ErrorCode::kNonFiniteGradient: return "NonFiniteGradient";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kBadVersion: return "BadVersion";
    case ErrorCode::kBadDtype: return "BadDtype";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kDimOverflow: return "DimOverflow";
    case ErrorCode::kMissingFile: return "MissingFile";
    case ErrorCode::kRowCountMismatch: return "RowCountMismatch";
    case ErrorCode::kBadCheckpoint: return "BadCheckpoint";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kBadConfig:
    case ErrorCode::kBadTemperature:
    case ErrorCode::kBadK:
    case ErrorCode::kEmptyQueue:
    case ErrorCode::kEmptyInput:
      return 2;
    case ErrorCode::kBadMagic:
    case ErrorCode::kBadVersion:
    case ErrorCode::kBadDtype:
    case ErrorCode::kTruncatedFile:
    case ErrorCode::kDimOverflow:
    case ErrorCode::kMissingFile:
    case ErrorCode::kBadCheckpoint:
    case ErrorCode::kIo:
      return 3;
    case ErrorCode::kZeroVector:
    case ErrorCode::kNonFiniteValue:
    case ErrorCode::kNonFiniteGradient:
    case ErrorCode::kNonFiniteLoss:
      return 4;
    case ErrorCode::kDimMismatch:
    case ErrorCode::kRowCountMismatch:
      return 5;
  }
  return 1;
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
      code_(code) {}

void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace kdalign
