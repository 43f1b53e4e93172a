#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mlow::cli {

/// Process exit codes shared by every subcommand.
enum ExitCode : int {
    kSuccess = 0,
    kUsageError = 2,
    kDataError = 3,
};

/// Runs one invocation (args excludes the program name). Human-readable
/// diagnostics go to `err`, a one-line JSON summary to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mlow::cli
