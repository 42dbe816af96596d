#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace mcsis {

// Exit codes: 0 success, 1 input error, 2 numerical failure.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitNumerical = 2;

// Entry point of the `mcsis` tool; args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Flat key=value config: one entry per line, '#' starts a comment. Keys are
// long option names without the leading dashes.
std::vector<std::pair<std::string, std::string>> parse_config_text(const std::string& text);

}  // namespace mcsis
