#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace peakshift {

inline constexpr const char* kToolVersion = "0.1.0";

// Runs one subcommand. `args` excludes the program name. Exit codes: 0 on
// success, 1 on a module error, 2 on a config, schema or usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace peakshift
