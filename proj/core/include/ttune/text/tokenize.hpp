// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ttune {

/// Lowercased code tokens. Identifier/number runs ([A-Za-z0-9_]) form one
/// token, runs of comparison characters (=<>!) form one token, and any other
/// non-space character stands alone. "x = a()" -> {x, =, a, (, )}.
std::vector<std::string> split_tokens(std::string_view text);

std::string join_tokens(const std::vector<std::string>& tokens);

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace ttune
