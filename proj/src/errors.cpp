#include "fms/errors.hpp"

namespace fms {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kUnknownEdge: return "UnknownEdge";
    case ErrorCode::kOutOfDomain: return "OutOfDomain";
    case ErrorCode::kNonUnitSum: return "NonUnitSum";
    case ErrorCode::kMapEscapesDomain: return "MapEscapesDomain";
    case ErrorCode::kOverlappingPieces: return "OverlappingPieces";
    case ErrorCode::kIncompletePieces: return "IncompletePieces";
    case ErrorCode::kBudgetExceeded: return "BudgetExceeded";
    case ErrorCode::kNotPiecewiseConstant: return "NotPiecewiseConstant";
    case ErrorCode::kRefinementBudgetExceeded: return "RefinementBudgetExceeded";
    case ErrorCode::kNonConstantOnCell: return "NonConstantOnCell";
    case ErrorCode::kImageSplitsCells: return "ImageSplitsCells";
    case ErrorCode::kSingularSystem: return "SingularSystem";
    case ErrorCode::kDegenerateSampling: return "DegenerateSampling";
    case ErrorCode::kZeroMassState: return "ZeroMassState";
    case ErrorCode::kEmptyTrace: return "EmptyTrace";
    case ErrorCode::kEmptySamples: return "EmptySamples";
    case ErrorCode::kDegenerateCellOnly: return "DegenerateCellOnly";
    case ErrorCode::kInconsistentMerge: return "InconsistentMerge";
    case ErrorCode::kMissingSeed: return "MissingSeed";
  }
  return "Error";
}

ErrorClass error_class(ErrorCode code) {
  switch (code) {
    case ErrorCode::kBudgetExceeded:
    case ErrorCode::kRefinementBudgetExceeded:
      return ErrorClass::kBudget;
    case ErrorCode::kNonConstantOnCell:
    case ErrorCode::kImageSplitsCells:
    case ErrorCode::kDegenerateSampling:
    case ErrorCode::kZeroMassState:
    case ErrorCode::kInconsistentMerge:
      return ErrorClass::kInvariant;
    default:
      return ErrorClass::kValidation;
  }
}

}  // namespace fms
