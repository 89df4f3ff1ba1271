#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace jenn::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Environment variable naming the default output directory for `bench`.
inline constexpr const char* kOutputDirEnv = "JENN_OUTPUT_DIR";

/// Runs the command line `args` (args[0] is the program name) and returns the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace jenn::cli
