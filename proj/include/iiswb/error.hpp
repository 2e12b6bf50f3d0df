#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace iiswb {

enum class ErrorCode {
  InvalidModel,
  UnknownParam,
  NotInfeasible,
  IntegerVariablesPresent,
  EnumerationBudgetExceeded,
  TooLarge,
  NodeBudgetExceeded,
  SolveBudgetExceeded,
  NonlinearRepairUnsupported,
  Unrepairable,
  NotApplicable,
  MissingContext,
  ToolLoopExceeded,
  ClientError,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace iiswb
