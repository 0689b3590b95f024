#pragma once

#include <cstddef>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace decayrate::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs the command line `args` (without the program name). Subcommands:
/// simulate, estimate, crb, experiment, bench. Returns the process exit code:
/// 0 success, 1 runtime failure, 2 usage or validation error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Parses "start:stop:step", "start:stop" (step 1) or a single value, and
/// comma-separated lists of those. The result must be non-empty and strictly
/// ascending; throws std::invalid_argument otherwise.
std::vector<std::size_t> parse_n_range(std::string_view text);

}  // namespace decayrate::cli
