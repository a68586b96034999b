// Copyright 2026 The raxelkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace raxelkit {

enum class ErrorCode {
  InvalidPose,
  InvalidIntrinsics,
  InvalidTrajectory,
  IndexOutOfRange,
  ShapeMismatch,
  DegenerateGeometry,
  NonPositiveWeightSum,
  InsufficientInliers,
  DegenerateDirection,
  InvalidFrameCount,
  LengthMismatch,
  ReferenceMismatch,
  TooFewFrames,
  InvalidArgument,
  ParseError,
  IoError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidPose: return "InvalidPose";
    case ErrorCode::InvalidIntrinsics: return "InvalidIntrinsics";
    case ErrorCode::InvalidTrajectory: return "InvalidTrajectory";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::NonPositiveWeightSum: return "NonPositiveWeightSum";
    case ErrorCode::InsufficientInliers: return "InsufficientInliers";
    case ErrorCode::DegenerateDirection: return "DegenerateDirection";
    case ErrorCode::InvalidFrameCount: return "InvalidFrameCount";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ReferenceMismatch: return "ReferenceMismatch";
    case ErrorCode::TooFewFrames: return "TooFewFrames";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

/// Exception type thrown by every raxelkit operation. The code is stable and
/// meant to be matched on; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace raxelkit
