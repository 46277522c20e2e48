#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace costot {

enum class ErrorCode {
  invalid_argument,
  zero_vector,
  dimension_mismatch,
  shape_mismatch,
  marginal_mismatch,
  not_converged,
  too_large,
  separation_failure,
  non_finite_loss,
  out_of_range,
  all_empty,
  parse_error,
  io_error,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception carrying a machine-readable code. Every failure raised by the
/// library is an Error, so callers can map codes to exit statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace costot
