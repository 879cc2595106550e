#include "dfrl/error.hpp"

namespace dfrl {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIndexOutOfRange: return "index out of range";
    case ErrorCode::kNonFiniteValue: return "non-finite value";
    case ErrorCode::kMissingNextAction: return "missing next action";
    case ErrorCode::kDimensionMismatch: return "dimension mismatch";
    case ErrorCode::kInvalidArgument: return "invalid argument";
    case ErrorCode::kInfeasibleArena: return "infeasible arena";
    case ErrorCode::kNotConverged: return "not converged";
    case ErrorCode::kWrongPhase: return "wrong phase";
    case ErrorCode::kNodeNotInItinerary: return "node not in itinerary";
    case ErrorCode::kEmptyItinerary: return "empty itinerary";
    case ErrorCode::kTagMismatch: return "tag mismatch";
    case ErrorCode::kOversize: return "oversize";
    case ErrorCode::kProtocol: return "protocol error";
    case ErrorCode::kMigration: return "migration error";
    case ErrorCode::kConfig: return "config error";
    case ErrorCode::kIo: return "io error";
  }
  return "unknown";
}

}  // namespace dfrl
