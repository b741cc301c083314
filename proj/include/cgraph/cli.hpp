#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cgraph {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitViolation = 1, kExitUsage = 2 };

/// Runs one command. `args` excludes the program name. `in` backs the `-` file name.
int run_cli(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace cgraph
