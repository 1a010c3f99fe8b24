#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ctmdp {

/// Runs the command line `args` (without the program name); the JSON report
/// goes to `out`, diagnostics to `err`. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ctmdp
