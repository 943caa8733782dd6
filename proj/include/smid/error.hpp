#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace smid {

enum class ErrorCode {
  EmptyRow,
  DuplicateRows,
  TooManyEvents,
  BadPriors,
  BadProbability,
  BadParameter,
  IndexOutOfRange,
  NoStimulatedCamera,
  DimensionTooLarge,
  NonFiniteData,
  NonFiniteLoss,
  ShapeMismatch,
  EmptyTestSplit,
  DimensionMismatch,
  EmptySamples,
  ParseError,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-checkable code next to the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace smid
