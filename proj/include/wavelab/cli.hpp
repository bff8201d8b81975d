#pragma once

// Batch runner behind tools/wavelab. Exit codes: 0 success, 2 configuration
// error, 3 numerical failure (including a reproduced scenario that fails).

#include <ostream>
#include <string>
#include <vector>

#include "wavelab/config.hpp"

namespace wavelab {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

// args excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Known keys and defaults of a subcommand, global keys included.
std::vector<KeySpec> subcommand_schema(const std::string& subcommand);

}  // namespace wavelab
