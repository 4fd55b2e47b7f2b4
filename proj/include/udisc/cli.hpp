#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace udisc::cli {

/// Exit codes: 0 success, 1 user/input error, 2 numeric failure.
enum ExitCode : int { kOk = 0, kUserError = 1, kNumericFailure = 2 };

/// Runs the command line (args excludes the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace udisc::cli
