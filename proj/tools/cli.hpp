#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace calibre::cli {

/// Exit codes of the `calibre` tool.
enum ExitCode : int {
  kOk = 0,
  kValidationFailure = 1,  // bad flags, malformed or invalid input
  kIoFailure = 2,          // unreadable input, unwritable output
  kNumericFailure = 3,     // factorization or other numerical breakdown
};

/// Entry point shared by main() and the tests. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace calibre::cli
