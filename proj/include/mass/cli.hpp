#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mass {

// Entry point behind the `mass` binary. Exit codes: 0 success, 1 user error
// (flags, config), 2 runtime failure (missing artifacts, failed runs).
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

}  // namespace mass
