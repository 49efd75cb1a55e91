#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace dv {

inline constexpr int kExitVerified = 0;
inline constexpr int kExitUndetermined = 1;
inline constexpr int kExitUsage = 2;

/// Command-line front end. `args` excludes the program name. Returns the
/// process exit code: 0 verified / success, 1 undetermined (or soundness
/// violations for `fuzz`), 2 usage or input errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace dv
