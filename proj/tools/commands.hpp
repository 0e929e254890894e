#pragma once

#include <string>
#include <vector>

namespace uap::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Parses and runs one invocation; args exclude the program name.
int run(const std::vector<std::string>& args);

}  // namespace uap::cli
