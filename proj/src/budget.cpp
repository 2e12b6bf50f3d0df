#include "iiswb/budget.hpp"

#include "iiswb/error.hpp"

namespace iiswb {

namespace {
thread_local std::optional<Clock::time_point> current_deadline;
}

ScopedDeadline::ScopedDeadline(std::optional<Clock::time_point> deadline)
    : previous_(current_deadline) {
  if (deadline && (!current_deadline || *deadline < *current_deadline)) current_deadline = deadline;
}

ScopedDeadline::~ScopedDeadline() { current_deadline = previous_; }

void poll_deadline() {
  if (current_deadline && Clock::now() > *current_deadline)
    throw Error(ErrorCode::SolveBudgetExceeded, "solve time budget exhausted");
}

}  // namespace iiswb
