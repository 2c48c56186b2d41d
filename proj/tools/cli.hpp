#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace jointflow::cli {

/// Runs one command line; argv[0] is the program name. Returns the process exit code.
int runCli(int argc, char** argv);

/// Same, for in-process callers. Messages go to `out` / `err`.
int runCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace jointflow::cli
