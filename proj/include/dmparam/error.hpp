#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dmparam {

enum class ErrorCode {
  not_square,
  not_hermitian,
  not_skew_hermitian,
  not_psd,
  not_unitary,
  convergence_failure,
  dimension_mismatch,
  invalid_simplex,
  singular_angle,
  missing_factorization,
  angle_out_of_range,
  out_of_range,
  condition_violated,
  unsupported_shape,
  bad_normalization,
  not_a_state,
};

constexpr std::string_view to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::not_square: return "NotSquare";
    case ErrorCode::not_hermitian: return "NotHermitian";
    case ErrorCode::not_skew_hermitian: return "NotSkewHermitian";
    case ErrorCode::not_psd: return "NotPSD";
    case ErrorCode::not_unitary: return "NotUnitary";
    case ErrorCode::convergence_failure: return "ConvergenceFailure";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::invalid_simplex: return "InvalidSimplex";
    case ErrorCode::singular_angle: return "SingularAngle";
    case ErrorCode::missing_factorization: return "MissingFactorization";
    case ErrorCode::angle_out_of_range: return "AngleOutOfRange";
    case ErrorCode::out_of_range: return "OutOfRange";
    case ErrorCode::condition_violated: return "ConditionViolated";
    case ErrorCode::unsupported_shape: return "UnsupportedShape";
    case ErrorCode::bad_normalization: return "BadNormalization";
    case ErrorCode::not_a_state: return "NotAState";
  }
  return "Unknown";
}

/// Exception carrying a machine-readable code and, where meaningful, the
/// residual that tripped the check.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, double residual = 0.0)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code),
        residual_(residual) {}

  ErrorCode code() const noexcept { return code_; }
  double residual() const noexcept { return residual_; }

 private:
  ErrorCode code_;
  double residual_;
};

}  // namespace dmparam
