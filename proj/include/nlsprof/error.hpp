#pragma once

#include <stdexcept>
#include <string>

namespace nlsprof {

enum class ErrorCode {
  InvalidArgument,
  InvalidPotential,
  GridMismatch,
  AssumptionViolated,
  SingularResolvent,
  ResolutionInsufficient,
  ContinuationFailed,
  DerivativeFailed,
  OutOfRange,
  PhaseUndefined,
  BlowUp,
  DesignFailed,
  TooFewSamples,
  NonMonotoneTime,
  NonPositiveValues,
  WindowError,
  ConfigError,
  IoError,
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidPotential: return "InvalidPotential";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::AssumptionViolated: return "AssumptionViolated";
    case ErrorCode::SingularResolvent: return "SingularResolvent";
    case ErrorCode::ResolutionInsufficient: return "ResolutionInsufficient";
    case ErrorCode::ContinuationFailed: return "ContinuationFailed";
    case ErrorCode::DerivativeFailed: return "DerivativeFailed";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::PhaseUndefined: return "PhaseUndefined";
    case ErrorCode::BlowUp: return "BlowUp";
    case ErrorCode::DesignFailed: return "DesignFailed";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::NonMonotoneTime: return "NonMonotoneTime";
    case ErrorCode::NonPositiveValues: return "NonPositiveValues";
    case ErrorCode::WindowError: return "WindowError";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Continuation stops at the first sample where Newton does not converge.
class ContinuationError : public Error {
 public:
  ContinuationError(const std::string& what, double last_good)
      : Error(ErrorCode::ContinuationFailed, what), last_good_(last_good) {}

  double last_good_parameter() const noexcept { return last_good_; }

 private:
  double last_good_;
};

[[noreturn]] inline void fail(ErrorCode c, const std::string& what) { throw Error(c, what); }

inline void require(bool ok, ErrorCode c, const std::string& what) {
  if (!ok) fail(c, what);
}

}  // namespace nlsprof
