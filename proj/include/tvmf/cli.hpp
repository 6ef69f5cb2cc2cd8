#pragma once

#include <iosfwd>

namespace tvmf {

/// Exit codes: 0 success, 1 runtime failure, 2 usage or config error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Entry point behind the `tvmf-cl` binary. Subcommands: train, sweep,
/// curve, check, loss-check.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tvmf
