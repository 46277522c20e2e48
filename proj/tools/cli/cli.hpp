#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace costot::cli {

/// Stable exit-code contract for scripting.
enum ExitCode : int {
  kSuccess = 0,
  kInputError = 1,
  kNotConverged = 2,
  kNumericAbort = 3,
  kVerificationFailed = 4,
};

/// Runs one costot command line. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace costot::cli
