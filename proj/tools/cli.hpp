#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace mospred::cli {

/// Runs the `mospred` command line with `args` (program name excluded).
/// Results go to `out`; failures print one JSON line {"error", "message"} to
/// `err` and return 1.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mospred::cli
