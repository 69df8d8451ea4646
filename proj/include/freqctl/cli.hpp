#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace freqctl {

/// Command-line front end. Returns 0 on success, 1 on a domain error and 2 on
/// a usage error; diagnostics go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace freqctl
