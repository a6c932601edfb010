#pragma once

// Command-line front end of the welander tool, callable in-process.

#include <ostream>
#include <string>
#include <vector>

namespace welander::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kInvalidInput = 2;
inline constexpr int kInternalDefect = 3;

// Runs one invocation. args excludes the program name. Primary output goes
// to out (unless --out redirects it), error objects and logs to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace welander::cli
