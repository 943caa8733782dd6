#include "smid/error.hpp"

namespace smid {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyRow: return "EmptyRow";
    case ErrorCode::DuplicateRows: return "DuplicateRows";
    case ErrorCode::TooManyEvents: return "TooManyEvents";
    case ErrorCode::BadPriors: return "BadPriors";
    case ErrorCode::BadProbability: return "BadProbability";
    case ErrorCode::BadParameter: return "BadParameter";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::NoStimulatedCamera: return "NoStimulatedCamera";
    case ErrorCode::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorCode::NonFiniteData: return "NonFiniteData";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyTestSplit: return "EmptyTestSplit";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::EmptySamples: return "EmptySamples";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace smid
