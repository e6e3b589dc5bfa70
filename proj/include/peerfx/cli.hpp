#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace peerfx {

// Exit codes of the peerfx command line.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitData = 3,
  kExitNumerical = 4,
};

// Runs the CLI on `args` (args[0] is the program name).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace peerfx
