#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace difflight::cli {

// Runs one command line (argv[0] is the program name). Diagnostics go to
// `err`, summaries to `out`. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

enum ExitCode : int {
  kOk = 0,
  kVerifyFailed = 1,
  kBadInput = 2,
  kInfeasible = 3,
};

}  // namespace difflight::cli
