#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace specprop::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitFailure = 1,    // I/O problems, replay mismatch
  kExitUsage = 2,      // bad flags or config, missing inputs
  kExitNumerical = 3,  // NaN, aborted training, degenerate operator
};

// Runs one command line (arguments after the program name). Never throws.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace specprop::cli
