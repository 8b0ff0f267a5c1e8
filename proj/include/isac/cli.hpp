#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace isac {

enum ExitCode : int {
    kExitOk = 0,
    kExitError = 1,
    kExitInfeasible = 2,
    kExitSolver = 3,
    kExitUsage = 64,
};

/// Runs the command-line tool; args exclude the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace isac
