// SPDX-License-Identifier: Apache-2.0
#include "ttune/text/tokenize.hpp"

#include <cctype>

namespace ttune {
namespace {

bool is_word(unsigned char c) { return std::isalnum(c) != 0 || c == '_'; }
bool is_comparison(unsigned char c) { return c == '=' || c == '<' || c == '>' || c == '!'; }

}  // namespace

std::vector<std::string> split_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c) != 0) {
      ++i;
      continue;
    }
    std::size_t j = i + 1;
    if (is_word(c)) {
      while (j < text.size() && is_word(static_cast<unsigned char>(text[j]))) ++j;
    } else if (is_comparison(c)) {
      while (j < text.size() && is_comparison(static_cast<unsigned char>(text[j]))) ++j;
    }
    std::string token(text.substr(i, j - i));
    for (char& ch : token) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    out.push_back(std::move(token));
    i = j;
  }
  return out;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace ttune
