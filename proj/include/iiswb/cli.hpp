#pragma once

#include <iosfwd>

namespace iiswb {

enum ExitCode : int {
  kExitOk = 0,
  kExitInfeasible = 1,
  kExitUsage = 2,
  kExitBudget = 3,
  kExitParse = 4,
};

/// The `iiswb` command line. Machine output goes to `out`, human text to `err`.
int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace iiswb
