#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tcdl::cli {

enum ExitCode : int {
    kOk = 0,
    kCheckFailure = 1,
    kInputError = 2,
    kIndeterminate = 3,
};

/// Parses "a..b" or a single integer into an inclusive seed list.
std::vector<unsigned long long> parse_seed_range(const std::string& text);

/// Runs the tcdl command line. Results go to `out`, diagnostics to `err`; the return value is
/// the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tcdl::cli
