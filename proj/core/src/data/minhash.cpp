// SPDX-License-Identifier: Apache-2.0
#include "ttune/data/minhash.hpp"

#include <algorithm>
#include <limits>

#include "ttune/error.hpp"
#include "ttune/numerics/random.hpp"
#include "ttune/text/tokenize.hpp"

namespace ttune::data {

TokenSet token_set(std::string_view text) {
  auto tokens = split_tokens(text);
  return TokenSet(tokens.begin(), tokens.end());
}

MinHashSignature minhash(const TokenSet& tokens, std::size_t k, std::uint64_t seed, std::string id) {
  if (tokens.empty()) fail(ErrorKind::EmptyTokenSet, "cannot sign an empty token set" + (id.empty() ? "" : " (" + id + ")"));
  if (k == 0) fail(ErrorKind::InvalidConfig, "k must be >= 1");
  std::vector<std::uint64_t> salts(k);
  for (std::size_t i = 0; i < k; ++i) salts[i] = splitmix64(seed + 0x9e3779b97f4a7c15ULL * (i + 1));
  MinHashSignature sig{std::vector<std::uint64_t>(k, std::numeric_limits<std::uint64_t>::max()), std::move(id)};
  for (const auto& t : tokens) {
    const std::uint64_t base = fnv1a64(t);
    for (std::size_t i = 0; i < k; ++i) sig.values[i] = std::min(sig.values[i], splitmix64(base ^ salts[i]));
  }
  return sig;
}

double estimate_jaccard(const MinHashSignature& a, const MinHashSignature& b) {
  if (a.values.size() != b.values.size() || a.values.empty()) {
    fail(ErrorKind::LengthMismatch, "signature lengths " + std::to_string(a.values.size()) + " and " +
                                        std::to_string(b.values.size()));
  }
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) same += a.values[i] == b.values[i];
  return static_cast<double>(same) / static_cast<double>(a.values.size());
}

double exact_jaccard(const TokenSet& a, const TokenSet& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& t : a) inter += b.count(t);
  return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

LshIndex::LshIndex(std::size_t bands, std::size_t rows) : bands_(bands), rows_(rows), buckets_(bands) {
  if (bands == 0 || rows == 0) fail(ErrorKind::InvalidConfig, "bands and rows must be >= 1");
}

std::vector<std::uint64_t> LshIndex::band_keys(const MinHashSignature& signature) const {
  if (signature.values.size() != bands_ * rows_) {
    fail(ErrorKind::InvalidConfig, "signature length " + std::to_string(signature.values.size()) + " != " +
                                       std::to_string(bands_) + " x " + std::to_string(rows_));
  }
  std::vector<std::uint64_t> keys(bands_);
  for (std::size_t b = 0; b < bands_; ++b) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::size_t r = 0; r < rows_; ++r) h = splitmix64(h ^ signature.values[b * rows_ + r]);
    keys[b] = h;
  }
  return keys;
}

void LshIndex::insert(std::size_t item, const MinHashSignature& signature) {
  const auto keys = band_keys(signature);
  for (std::size_t b = 0; b < bands_; ++b) buckets_[b][keys[b]].push_back(item);
}

std::vector<std::size_t> LshIndex::candidates(const MinHashSignature& signature) const {
  const auto keys = band_keys(signature);
  std::vector<std::size_t> out;
  for (std::size_t b = 0; b < bands_; ++b) {
    auto it = buckets_[b].find(keys[b]);
    if (it != buckets_[b].end()) out.insert(out.end(), it->second.begin(), it->second.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::size_t LshIndex::bucket_count(std::size_t item) const {
  std::size_t n = 0;
  for (const auto& band : buckets_)
    for (const auto& [key, items] : band) n += static_cast<std::size_t>(std::count(items.begin(), items.end(), item));
  return n;
}

}  // namespace ttune::data
