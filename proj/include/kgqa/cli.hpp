#pragma once

#include <iosfwd>

namespace kgqa {

/// Exit codes shared by every subcommand.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2 };

/// Entry point of the `kgqa` tool: ask, bench, replay, validate and
/// config-show. Writes normal output to `out` and diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace kgqa
