#pragma once

#include <iosfwd>

namespace drpg {

/// Entry point of the `drpg` tool. Returns 0 on success, 1 on a runtime
/// error (one-line diagnostic on `err`) and 2 on a usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace drpg
