#pragma once

#include <ostream>

namespace ngate {

/// Entry point of the neutral-gate executable. Exit codes: 0 success,
/// 1 data/model error, 2 usage error. Summaries go to `out` as key=value lines.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ngate
