#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace omr {

// Named failure kinds. The names are part of the CLI and HTTP contracts.
enum class ErrorCode {
  EmptyImage,
  DescriptorMismatch,
  InsufficientMatches,
  NoConsensus,
  SingularTransform,
  RegistrationFailed,
  DegenerateRoi,
  ConfigMismatch,
  DegenerateTrainingSet,
  DimensionMismatch,
  InsufficientDescriptors,
  ConfigInvalid,
  Divergence,
  ModelClassMismatch,
  SpecInvalid,
  QuestionUnknown,
  RoiOutOfBounds,
  ParseError,
  ValidationError,
  LabelMissing,
  TooFewSamples,
  LengthMismatch,
  IoError,
  ModelFormat,
};

std::string_view error_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const noexcept { return error_name(code_); }

 private:
  ErrorCode code_;
};

}  // namespace omr
