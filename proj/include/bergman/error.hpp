#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bergman {

enum class ErrorCode {
  InvalidArgument,
  NotInDomain,
  SeriesTruncationFailure,
  NearSingularLocus,
  NonPositiveMetric,
  QuadratureNotConverged,
  OptimizerNotConverged,
  KernelZeroAtBasePair,
  NoSignChange,
  ContourThroughZero,
  NewtonDiverged,
  BranchAmbiguity,
  NotOnZeroSet,
  TooLarge,
  IoFailure,
};

constexpr std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotInDomain: return "NotInDomain";
    case ErrorCode::SeriesTruncationFailure: return "SeriesTruncationFailure";
    case ErrorCode::NearSingularLocus: return "NearSingularLocus";
    case ErrorCode::NonPositiveMetric: return "NonPositiveMetric";
    case ErrorCode::QuadratureNotConverged: return "QuadratureNotConverged";
    case ErrorCode::OptimizerNotConverged: return "OptimizerNotConverged";
    case ErrorCode::KernelZeroAtBasePair: return "KernelZeroAtBasePair";
    case ErrorCode::NoSignChange: return "NoSignChange";
    case ErrorCode::ContourThroughZero: return "ContourThroughZero";
    case ErrorCode::NewtonDiverged: return "NewtonDiverged";
    case ErrorCode::BranchAmbiguity: return "BranchAmbiguity";
    case ErrorCode::NotOnZeroSet: return "NotOnZeroSet";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::IoFailure: return "IoFailure";
  }
  return "Unknown";
}

/// Exception type for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, ErrorCode code, const std::string& what) {
  if (!condition) fail(code, what);
}

}  // namespace bergman
