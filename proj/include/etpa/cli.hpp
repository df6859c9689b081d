#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace etpa::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_validation = 1;
inline constexpr int exit_runtime = 2;

/// Parses and dispatches one invocation (argv[0] excluded). Returns the exit
/// status: 0 success, 1 bad input, 2 runtime failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace etpa::cli
