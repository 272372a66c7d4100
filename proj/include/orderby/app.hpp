#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace orderby {

// Command-line entry point, callable in-process for tests. `args` excludes
// the program name. Exit codes: 0 success, 1 runtime failure, 2 usage error.
int run_app(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace orderby
