// SPDX-License-Identifier: Apache-2.0
#include "ttune/backbone/vocab.hpp"

#include <set>

#include "ttune/error.hpp"
#include "ttune/text/tokenize.hpp"

namespace ttune::backbone {

namespace {
const std::vector<std::string> kSpecials = {"<pad>", "<bos>", "<eos>", "<unk>"};
}

Vocab::Vocab() : Vocab(std::vector<std::string>{}) {}

Vocab::Vocab(const std::vector<std::string>& tokens) {
  for (const auto& s : kSpecials) {
    index_.emplace(s, tokens_.size());
    tokens_.push_back(s);
  }
  for (const auto& t : tokens) {
    if (index_.count(t) != 0) fail(ErrorKind::SchemaError, "duplicate vocabulary token '" + t + "'");
    index_.emplace(t, tokens_.size());
    tokens_.push_back(t);
  }
}

Vocab Vocab::build(const std::vector<std::string>& texts) {
  std::set<std::string> all;
  for (const auto& text : texts)
    for (auto& t : split_tokens(text)) all.insert(std::move(t));
  for (const auto& s : kSpecials) all.erase(s);
  return Vocab(std::vector<std::string>(all.begin(), all.end()));
}

std::size_t Vocab::id(std::string_view token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

std::vector<std::string> Vocab::regular_tokens() const { return {tokens_.begin() + kSpecials.size(), tokens_.end()}; }

std::vector<std::size_t> Vocab::encode(std::string_view text) const {
  std::vector<std::size_t> ids;
  for (const auto& t : split_tokens(text)) ids.push_back(id(t));
  return ids;
}

std::string Vocab::decode(const std::vector<std::size_t>& ids) const {
  std::vector<std::string> words;
  for (std::size_t i : ids) {
    if (i == kPad || i == kBos || i == kEos) continue;
    words.push_back(i < tokens_.size() ? tokens_[i] : tokens_[kUnk]);
  }
  return join_tokens(words);
}

}  // namespace ttune::backbone
