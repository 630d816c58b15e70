#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cs {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

/// Runs the command-line tool. `args` excludes the program name.
/// Returns 0 on success, 1 on usage errors and 2 on data errors.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Version string recorded in run manifests.
std::string tool_version();

}  // namespace cs
