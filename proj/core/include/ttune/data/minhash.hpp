// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace ttune::data {

inline constexpr std::size_t kDefaultPermutations = 128;
inline constexpr std::size_t kDefaultBands = 16;
inline constexpr std::uint64_t kDefaultHashSeed = 0x5eed;

using TokenSet = std::set<std::string>;

struct MinHashSignature {
  std::vector<std::uint64_t> values;
  std::string id;
};

/// Token set of a text (split_tokens, de-duplicated).
TokenSet token_set(std::string_view text);

/// k seeded hash functions, each reduced by min over the set. Throws
/// EmptyTokenSet.
MinHashSignature minhash(const TokenSet& tokens, std::size_t k = kDefaultPermutations,
                         std::uint64_t seed = kDefaultHashSeed, std::string id = {});

/// Fraction of agreeing positions. Signatures must have equal length.
double estimate_jaccard(const MinHashSignature& a, const MinHashSignature& b);
double exact_jaccard(const TokenSet& a, const TokenSet& b);

/// Banding index: b bands of r consecutive signature rows. Items sharing
/// any band hash become candidates.
class LshIndex {
 public:
  LshIndex(std::size_t bands, std::size_t rows);

  std::size_t bands() const noexcept { return bands_; }
  std::size_t rows() const noexcept { return rows_; }

  /// Throws InvalidConfig when the signature length is not bands * rows.
  void insert(std::size_t item, const MinHashSignature& signature);
  /// Items previously inserted that share at least one band, ascending.
  std::vector<std::size_t> candidates(const MinHashSignature& signature) const;
  /// Bucket memberships of `item` (one per band once inserted).
  std::size_t bucket_count(std::size_t item) const;

 private:
  std::vector<std::uint64_t> band_keys(const MinHashSignature& signature) const;

  std::size_t bands_;
  std::size_t rows_;
  std::vector<std::map<std::uint64_t, std::vector<std::size_t>>> buckets_;
};

}  // namespace ttune::data
