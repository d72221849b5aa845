#pragma once

#include <ostream>

#include "qunit/budget.hpp"

namespace qunit {

// Exit codes of run_cli.
enum ExitCode : int {
  kExitOk = 0,
  kExitMismatch = 1,  // certificate not HOLDS, table mismatch
  kExitUsage = 2,
  kExitEngine = 3,    // resource limit, engine error, cancellation
};

// Subcommands: check, search, table, certify, conductors. `cancel` is
// forwarded to long scans.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
            const CancellationToken* cancel = nullptr);

}  // namespace qunit
