#pragma once

// Command-line front end: run | grid | analyze | replay | serve.

#include <string>
#include <vector>

namespace fic_teleop {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalidConfig = 1;
inline constexpr int kExitAbort = 2;
inline constexpr int kExitAnalysis = 3;
inline constexpr int kExitReplayMismatch = 4;

/// `args` excludes the program name.
int cli_run(const std::vector<std::string>& args);

}  // namespace fic_teleop
