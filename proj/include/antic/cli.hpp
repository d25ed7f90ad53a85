#pragma once

#include <iosfwd>

namespace antic {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Entry point of the `antic` tool. Errors go to `err` as one JSON line.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace antic
