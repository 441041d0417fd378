#pragma once

// Command-line front end: plan, simulate, compare, sweep, gen.
//
// Exit codes: 0 success, 1 usage or input error, 2 planning was infeasible
// and the fallback plan was reported instead.

#include <iosfwd>
#include <span>
#include <string>

namespace vidpreload {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitInfeasible = 2;

/// Default --config path when the flag is absent.
inline constexpr const char* kConfigEnv = "VIDPRELOAD_CONFIG";

/// `args` excludes the program name.
int run_cli(std::span<const std::string> args, std::ostream& out, std::ostream& err);

}  // namespace vidpreload
