#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dfrl {

enum class ErrorCode {
  kIndexOutOfRange,
  kNonFiniteValue,
  kMissingNextAction,
  kDimensionMismatch,
  kInvalidArgument,
  kInfeasibleArena,
  kNotConverged,
  kWrongPhase,
  kNodeNotInItinerary,
  kEmptyItinerary,
  kTagMismatch,
  kOversize,
  kProtocol,
  kMigration,
  kConfig,
  kIo,
};

std::string_view to_string(ErrorCode code);

/// Structured error carried by every failure the library reports.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dfrl
