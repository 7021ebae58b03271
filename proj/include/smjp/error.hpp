#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace smjp {

enum class ErrorCode {
  // core
  NotSquare,
  NonFinite,
  NegativeOffDiagonal,
  RowSumNonzero,
  NotStochastic,
  NegativeTime,
  DimensionMismatch,
  InvalidAlphabet,
  UnknownSymbol,
  // ctmc
  InvalidState,
  AbsorbingStateLoop,
  OmegaTooSmall,
  EmptyInterval,
  NonMonotoneTimestamps,
  TooManyVirtualPoints,
  // switching_hmm
  ZeroProbabilityObservation,
  InconsistentShapes,
  EmptyStatistics,
  StructureViolation,
  NonFiniteLikelihood,
  InvalidConfig,
  // foraging_env
  InvalidProbability,
  NonConvergence,
  // analysis
  GridMisalignment,
  DegenerateJoint,
  InvalidAction,
  EmptyGraph,
  TooFewEvents,
  // ingest
  MalformedLine,
  NonMonotoneTime,
  KTooLarge,
  MalformedModel,
  Io,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Broad grouping used by the CLI to pick an exit status.
enum class ErrorClass { Numeric, Input, Config, Io };

ErrorClass classify(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace smjp
