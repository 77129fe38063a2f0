#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace spr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitSchema = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitConfig = 4;

/// Entry point shared by the spr binary and the tests. `args` excludes the
/// program name. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace spr::cli
