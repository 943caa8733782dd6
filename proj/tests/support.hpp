#pragma once

#include <optional>

#include "smid/error.hpp"

namespace testing {

template <typename F>
std::optional<smid::ErrorCode> error_of(F&& f) {
  try {
    f();
  } catch (const smid::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

}  // namespace testing
