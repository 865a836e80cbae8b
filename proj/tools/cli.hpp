#pragma once

#include <string>
#include <vector>

namespace abaf::cli {

/// Runs one command line (argv[0] is the program name). Returns the exit
/// code: 0 success, 1 runtime failure or missing input, 2 usage error.
int run(const std::vector<std::string>& args);

}  // namespace abaf::cli
