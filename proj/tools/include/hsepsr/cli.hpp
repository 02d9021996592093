#pragma once

#include <iosfwd>

namespace hsepsr::cli {

/// Runs the command line. Returns the process exit code; results go to `out`,
/// usage and diagnostics to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hsepsr::cli
