#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace crisp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;

/// Parses `args` (without the program name), runs the chosen subcommand and
/// returns its exit code. Machine-readable results go to `out`, diagnostics
/// to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace crisp::cli
