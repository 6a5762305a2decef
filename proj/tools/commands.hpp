#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace loopflow::cli {

enum ExitCode : int {
    kSuccess = 0,
    kValidationFailure = 1,
    kNonConvergence = 2,
    kIoFailure = 3,
};

/// Runs the command line `args` (args[0] is the program name). All output
/// goes to `out` / `err`; the return value is the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace loopflow::cli
