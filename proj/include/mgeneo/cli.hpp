#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mgeneo::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Runs the command line `args` (without the program name). Returns the exit
/// code: 0 success, 1 computation failure, 2 usage or configuration error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mgeneo::cli
