#pragma once

// Command-line front end. Exit codes: 0 success, 64 usage, 65 config/schema
// violation, 69 unsupported configuration, 70 internal error, 73 I/O error.
// Failures print one JSON object {"error": category, "message": ...} on
// stderr.

#include <iosfwd>
#include <string>
#include <vector>

namespace dbql {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 64,
  kExitSchema = 65,
  kExitUnsupported = 69,
  kExitInternal = 70,
  kExitIo = 73,
};

// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv);

}  // namespace dbql
