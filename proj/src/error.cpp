#include "omr/error.hpp"

namespace omr {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyImage: return "EmptyImage";
    case ErrorCode::DescriptorMismatch: return "DescriptorMismatch";
    case ErrorCode::InsufficientMatches: return "InsufficientMatches";
    case ErrorCode::NoConsensus: return "NoConsensus";
    case ErrorCode::SingularTransform: return "SingularTransform";
    case ErrorCode::RegistrationFailed: return "RegistrationFailed";
    case ErrorCode::DegenerateRoi: return "DegenerateRoi";
    case ErrorCode::ConfigMismatch: return "ConfigMismatch";
    case ErrorCode::DegenerateTrainingSet: return "DegenerateTrainingSet";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InsufficientDescriptors: return "InsufficientDescriptors";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::Divergence: return "Divergence";
    case ErrorCode::ModelClassMismatch: return "ModelClassMismatch";
    case ErrorCode::SpecInvalid: return "SpecInvalid";
    case ErrorCode::QuestionUnknown: return "QuestionUnknown";
    case ErrorCode::RoiOutOfBounds: return "RoiOutOfBounds";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::LabelMissing: return "LabelMissing";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ModelFormat: return "ModelFormat";
  }
  return "Unknown";
}

}  // namespace omr
