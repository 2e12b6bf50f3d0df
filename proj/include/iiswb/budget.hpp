#pragma once

// Wall-clock budget for long solves. A ScopedDeadline installs a deadline for
// the current thread; pivot and node loops call poll_deadline(), which throws
// Error(SolveBudgetExceeded) once it has passed.

#include <chrono>
#include <optional>

namespace iiswb {

using Clock = std::chrono::steady_clock;

class ScopedDeadline {
 public:
  explicit ScopedDeadline(std::optional<Clock::time_point> deadline);
  ~ScopedDeadline();
  ScopedDeadline(const ScopedDeadline&) = delete;
  ScopedDeadline& operator=(const ScopedDeadline&) = delete;

 private:
  std::optional<Clock::time_point> previous_;
};

void poll_deadline();

}  // namespace iiswb
