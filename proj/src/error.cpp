#include "smjp/error.hpp"

namespace smjp {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NotSquare: return "NotSquare";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NegativeOffDiagonal: return "NegativeOffDiagonal";
    case ErrorCode::RowSumNonzero: return "RowSumNonzero";
    case ErrorCode::NotStochastic: return "NotStochastic";
    case ErrorCode::NegativeTime: return "NegativeTime";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidAlphabet: return "InvalidAlphabet";
    case ErrorCode::UnknownSymbol: return "UnknownSymbol";
    case ErrorCode::InvalidState: return "InvalidState";
    case ErrorCode::AbsorbingStateLoop: return "AbsorbingStateLoop";
    case ErrorCode::OmegaTooSmall: return "OmegaTooSmall";
    case ErrorCode::EmptyInterval: return "EmptyInterval";
    case ErrorCode::NonMonotoneTimestamps: return "NonMonotoneTimestamps";
    case ErrorCode::TooManyVirtualPoints: return "TooManyVirtualPoints";
    case ErrorCode::ZeroProbabilityObservation: return "ZeroProbabilityObservation";
    case ErrorCode::InconsistentShapes: return "InconsistentShapes";
    case ErrorCode::EmptyStatistics: return "EmptyStatistics";
    case ErrorCode::StructureViolation: return "StructureViolation";
    case ErrorCode::NonFiniteLikelihood: return "NonFiniteLikelihood";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidProbability: return "InvalidProbability";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::GridMisalignment: return "GridMisalignment";
    case ErrorCode::DegenerateJoint: return "DegenerateJoint";
    case ErrorCode::InvalidAction: return "InvalidAction";
    case ErrorCode::EmptyGraph: return "EmptyGraph";
    case ErrorCode::TooFewEvents: return "TooFewEvents";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::NonMonotoneTime: return "NonMonotoneTime";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::MalformedModel: return "MalformedModel";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

ErrorClass classify(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Io:
      return ErrorClass::Io;
    case ErrorCode::MalformedLine:
    case ErrorCode::NonMonotoneTime:
    case ErrorCode::NonMonotoneTimestamps:
    case ErrorCode::UnknownSymbol:
    case ErrorCode::MalformedModel:
    case ErrorCode::GridMisalignment:
    case ErrorCode::TooFewEvents:
      return ErrorClass::Input;
    case ErrorCode::InvalidConfig:
    case ErrorCode::KTooLarge:
    case ErrorCode::InvalidAction:
    case ErrorCode::InvalidState:
    case ErrorCode::OmegaTooSmall:
      return ErrorClass::Config;
    default:
      return ErrorClass::Numeric;
  }
}

}  // namespace smjp
