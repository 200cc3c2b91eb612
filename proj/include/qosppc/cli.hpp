#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qosppc {

/// Process exit codes of the command-line front end.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitInvalidInput = 2,
  kExitMissionFailed = 3,
  kExitHashMismatch = 4,
  kExitVerifyFailed = 5,
};

/// Runs one invocation. `args` excludes the program name. Artifacts are
/// written to files; anything else goes to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& err);

}  // namespace qosppc
