#include "uwbloc/error.hpp"

namespace uwbloc {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonPositiveInterval: return "NonPositiveInterval";
    case ErrorCode::NegativeTof: return "NegativeTof";
    case ErrorCode::InvalidAnchorMap: return "InvalidAnchorMap";
    case ErrorCode::InsufficientAnchors: return "InsufficientAnchors";
    case ErrorCode::SingularGeometry: return "SingularGeometry";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NonMonotonicTimestamp: return "NonMonotonicTimestamp";
    case ErrorCode::TooFewPairs: return "TooFewPairs";
    case ErrorCode::DegenerateGeometry: return "DegenerateGeometry";
    case ErrorCode::NonPositiveDt: return "NonPositiveDt";
    case ErrorCode::VisualUnavailable: return "VisualUnavailable";
    case ErrorCode::AlreadyDeployed: return "AlreadyDeployed";
    case ErrorCode::OutOfArena: return "OutOfArena";
    case ErrorCode::AnchorCapacity: return "AnchorCapacity";
    case ErrorCode::NotDeployed: return "NotDeployed";
    case ErrorCode::InvalidDt: return "InvalidDt";
    case ErrorCode::WrongPhase: return "WrongPhase";
    case ErrorCode::CalibrationFailed: return "CalibrationFailed";
    case ErrorCode::TargetOutOfBounds: return "TargetOutOfBounds";
    case ErrorCode::NoFixAvailable: return "NoFixAvailable";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::ScriptInvalid: return "ScriptInvalid";
    case ErrorCode::SessionCorrupt: return "SessionCorrupt";
    case ErrorCode::ReplayDivergence: return "ReplayDivergence";
    case ErrorCode::BindFailed: return "BindFailed";
    case ErrorCode::SessionBusy: return "SessionBusy";
    case ErrorCode::ProtocolError: return "ProtocolError";
  }
  return "Unknown";
}

}  // namespace uwbloc
