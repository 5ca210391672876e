#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace odx {

enum class ErrorCode {
  BoundaryPoint,
  OutOfDomain,
  ToleranceAmbiguous,
  BudgetExceeded,
  NoExactInverse,
  HypothesisFailed,
  PartitionMismatch,
  NoConvergence,
  NonMonotoneBranch,
  ExcessCensoring,
  DisjointnessFailed,
  UnresolvedMassExceeds,
  UnresolvedBranchHit,
  NonMonotoneLengths,
  NonFullBranched,
  Degenerate,
  ConfigInvalid,
  NumericalFailure,
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::BoundaryPoint: return "BoundaryPoint";
    case ErrorCode::OutOfDomain: return "OutOfDomain";
    case ErrorCode::ToleranceAmbiguous: return "ToleranceAmbiguous";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::NoExactInverse: return "NoExactInverse";
    case ErrorCode::HypothesisFailed: return "HypothesisFailed";
    case ErrorCode::PartitionMismatch: return "PartitionMismatch";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NonMonotoneBranch: return "NonMonotoneBranch";
    case ErrorCode::ExcessCensoring: return "ExcessCensoring";
    case ErrorCode::DisjointnessFailed: return "DisjointnessFailed";
    case ErrorCode::UnresolvedMassExceeds: return "UnresolvedMassExceeds";
    case ErrorCode::UnresolvedBranchHit: return "UnresolvedBranchHit";
    case ErrorCode::NonMonotoneLengths: return "NonMonotoneLengths";
    case ErrorCode::NonFullBranched: return "NonFullBranched";
    case ErrorCode::Degenerate: return "Degenerate";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
  }
  return "Unknown";
}

/// Every failure raised by the library. `index` carries the offending
/// iterate, branch or sequence index when there is one.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, std::optional<std::int64_t> index = std::nullopt)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), index_(index) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::int64_t> index() const noexcept { return index_; }

 private:
  ErrorCode code_;
  std::optional<std::int64_t> index_;
};

}  // namespace odx
