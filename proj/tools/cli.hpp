#pragma once

#include <ostream>

namespace synten::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNotConverged = 3 };

/// Runs the command line. Results go to `out`; diagnostics go to `err`, one
/// line each, prefixed `error[usage]:`, `error[data]:` or `warning[convergence]:`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace synten::cli
