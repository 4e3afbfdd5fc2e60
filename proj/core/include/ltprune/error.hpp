#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ltprune {

enum class ErrorCode {
  kInvalidArgument,
  kInfeasible,
  kBadMagic,
  kUnsupportedVersion,
  kTruncatedPayload,
  kTrailingBytes,
  kLabelOutOfRange,
  kNonFiniteValue,
  kMissingLogits,
  kIo,
  kNonConvergence,
  kDivergence,
  kSaturation,
};

std::string_view to_string(ErrorCode code);

// All library failures surface as this exception; code() is what callers
// branch on (the CLI maps it to an exit status).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorCode::kInvalidArgument, message);
}

}  // namespace ltprune
