#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace idscope {

enum class ErrorCode {
  InvalidArgument,
  NonFinite,
  // file ingestion / serialization
  BadMagic,
  VersionUnsupported,
  TruncatedFile,
  ShapeMismatch,
  IoFailure,
  EmptyStack,
  NoLabels,
  // neighbor engine
  TooFewPoints,
  OrderOutOfRange,
  ZeroNormRow,
  // estimators
  ZeroDistance,
  KTooLarge,
  AllDiscarded,
  TooFewForRegression,
  EmptyBall,
  // generators
  AmbientTooSmall,
  OverlappingComponents,
};

std::string_view to_string(ErrorCode code);

/// Whether an error stems from the input data rather than the caller's configuration.
bool is_data_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace idscope
