#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fms {

enum class ErrorCode {
  kParse,
  kInvalidArgument,
  kUnknownEdge,
  kOutOfDomain,
  kNonUnitSum,
  kMapEscapesDomain,
  kOverlappingPieces,
  kIncompletePieces,
  kBudgetExceeded,
  kNotPiecewiseConstant,
  kRefinementBudgetExceeded,
  kNonConstantOnCell,
  kImageSplitsCells,
  kSingularSystem,
  kDegenerateSampling,
  kZeroMassState,
  kEmptyTrace,
  kEmptySamples,
  kDegenerateCellOnly,
  kInconsistentMerge,
  kMissingSeed,
};

std::string_view error_name(ErrorCode code);

// Broad grouping used for process exit statuses.
enum class ErrorClass { kValidation, kBudget, kInvariant };

ErrorClass error_class(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace fms
