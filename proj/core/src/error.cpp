#include "costot/error.hpp"

namespace costot {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::zero_vector: return "ZeroVector";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::shape_mismatch: return "ShapeMismatch";
    case ErrorCode::marginal_mismatch: return "MarginalMismatch";
    case ErrorCode::not_converged: return "NotConverged";
    case ErrorCode::too_large: return "TooLarge";
    case ErrorCode::separation_failure: return "SeparationFailure";
    case ErrorCode::non_finite_loss: return "NonFiniteLoss";
    case ErrorCode::out_of_range: return "OutOfRange";
    case ErrorCode::all_empty: return "AllEmpty";
    case ErrorCode::parse_error: return "ParseError";
    case ErrorCode::io_error: return "IoError";
  }
  return "Unknown";
}

}  // namespace costot
