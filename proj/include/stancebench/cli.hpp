#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace stancebench {

/// Exit status of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitGateway = 3 };

/// Runs the `stancebench` command line. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace stancebench
