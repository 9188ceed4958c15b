// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace ttune::backbone {

inline constexpr std::size_t kPad = 0;
inline constexpr std::size_t kBos = 1;
inline constexpr std::size_t kEos = 2;
inline constexpr std::size_t kUnk = 3;

/// Dense token ids. The four specials are fixed at 0..3; the remaining
/// tokens follow in the order given to the constructor.
class Vocab {
 public:
  Vocab();
  explicit Vocab(const std::vector<std::string>& tokens);

  /// Sorted, de-duplicated tokens of every text (split_tokens rules).
  static Vocab build(const std::vector<std::string>& texts);

  std::size_t size() const noexcept { return tokens_.size(); }
  std::size_t id(std::string_view token) const;
  const std::string& token(std::size_t id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  /// Tokens after the specials.
  std::vector<std::string> regular_tokens() const;

  std::vector<std::size_t> encode(std::string_view text) const;
  /// Joins with single spaces; PAD/BOS/EOS are dropped.
  std::string decode(const std::vector<std::size_t>& ids) const;

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

}  // namespace ttune::backbone
