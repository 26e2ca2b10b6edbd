#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace uwbloc {

enum class ErrorCode {
  InvalidArgument,
  // ranging
  NonPositiveInterval,
  NegativeTof,
  // locate
  InvalidAnchorMap,
  InsufficientAnchors,
  SingularGeometry,
  NoConvergence,
  // align
  NonMonotonicTimestamp,
  TooFewPairs,
  DegenerateGeometry,
  // odometry
  NonPositiveDt,
  VisualUnavailable,
  // sim
  AlreadyDeployed,
  OutOfArena,
  AnchorCapacity,
  NotDeployed,
  InvalidDt,
  // mission
  WrongPhase,
  CalibrationFailed,
  TargetOutOfBounds,
  NoFixAvailable,
  // gateway
  ConfigInvalid,
  ScriptInvalid,
  SessionCorrupt,
  ReplayDivergence,
  BindFailed,
  SessionBusy,
  ProtocolError,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every recoverable failure in the library is reported as an Error carrying
/// a machine-readable code; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace uwbloc
