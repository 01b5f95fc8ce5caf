#include "idscope/error.hpp"

namespace idscope {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::VersionUnsupported: return "VersionUnsupported";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::EmptyStack: return "EmptyStack";
    case ErrorCode::NoLabels: return "NoLabels";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::OrderOutOfRange: return "OrderOutOfRange";
    case ErrorCode::ZeroNormRow: return "ZeroNormRow";
    case ErrorCode::ZeroDistance: return "ZeroDistance";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::AllDiscarded: return "AllDiscarded";
    case ErrorCode::TooFewForRegression: return "TooFewForRegression";
    case ErrorCode::EmptyBall: return "EmptyBall";
    case ErrorCode::AmbientTooSmall: return "AmbientTooSmall";
    case ErrorCode::OverlappingComponents: return "OverlappingComponents";
  }
  return "Unknown";
}

bool is_data_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::AmbientTooSmall:
    case ErrorCode::OverlappingComponents:
    case ErrorCode::KTooLarge:
    case ErrorCode::OrderOutOfRange:
      return false;
    default:
      return true;
  }
}

}  // namespace idscope
