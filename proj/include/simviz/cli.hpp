#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace simviz::cli {

/// Runs one CLI invocation (arguments exclude the program name). Returns 0 on
/// success, 2 on a usage error and 1 on a runtime error; diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace simviz::cli
