#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace facegen {

// Exit codes of the command-line driver.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Runs the pipeline driver. args[0] is the program name. Help and tables go
// to `out`, logs and usage errors to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace facegen
