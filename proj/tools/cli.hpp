#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace popdyn::cli {

/// Runs one command line (args[0] is the program name). Results go to `out`
/// unless --out names a file; failures print one JSON error line to `err`.
/// Exit codes: 0 success, 1 runtime failure, 2 usage error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// "a:b:step", "a:b" (integer step 1), a comma list, or a single value.
std::vector<double> parse_real_list(const std::string& text);
std::vector<int> parse_int_list(const std::string& text);

}  // namespace popdyn::cli
