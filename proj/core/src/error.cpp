#include "ltprune/error.hpp"

namespace ltprune {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kInfeasible: return "infeasible";
    case ErrorCode::kBadMagic: return "bad-magic";
    case ErrorCode::kUnsupportedVersion: return "unsupported-version";
    case ErrorCode::kTruncatedPayload: return "truncated-payload";
    case ErrorCode::kTrailingBytes: return "trailing-bytes";
    case ErrorCode::kLabelOutOfRange: return "label-out-of-range";
    case ErrorCode::kNonFiniteValue: return "non-finite-value";
    case ErrorCode::kMissingLogits: return "missing-logits";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kNonConvergence: return "non-convergence";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kSaturation: return "saturation";
  }
  return "unknown";
}

}  // namespace ltprune
