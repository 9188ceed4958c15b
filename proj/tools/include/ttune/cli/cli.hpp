// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ttune::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomainError = 1;
inline constexpr int kExitUsage = 2;

/// Runs one subcommand. `args` excludes the program name. Domain errors are
/// reported on `err` as one JSON object {"error": kind, "message": text}.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Splices `--config FILE` (a JSON object of flag -> value, optionally
/// nested under the subcommand name) into the argument list. Flags given
/// explicitly win over the file.
std::vector<std::string> expand_config(const std::vector<std::string>& args);

}  // namespace ttune::cli
