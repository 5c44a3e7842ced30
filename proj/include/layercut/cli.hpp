#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "layercut/error.hpp"

namespace layercut {

// Process exit statuses of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitOracleMismatch = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitInput = 3;
inline constexpr int kExitComputation = 4;

int exit_code_for(ErrorCode code) noexcept;

/// Runs the tool with argv[1..] already split into `args`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace layercut
