// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ttune/data/minhash.hpp"
#include "ttune/pipeline/dataset.hpp"

namespace ttune::data {

struct DedupConfig {
  double threshold = 0.8;
  std::size_t permutations = kDefaultPermutations;
  std::size_t bands = kDefaultBands;
  std::uint64_t seed = kDefaultHashSeed;
};

struct RemovedPair {
  std::string removed_id;
  std::string kept_id;
  double estimated_jaccard = 0.0;
  bool exact = false;
};

struct DedupResult {
  std::vector<std::size_t> retained;  // indices into the corpus, ascending
  std::vector<RemovedPair> removed;
};

/// Two stages over the code text of each sample: identical code first, then
/// LSH candidates whose signature estimate exceeds the threshold. The later
/// item of a pair is dropped, so the first occurrence always survives.
DedupResult dedup(const std::vector<pipeline::Sample>& corpus, const DedupConfig& config = {});

struct LeakEntry {
  std::string kept_split;  // split the leaking item came from
  std::string removed_id;
  std::string matched_train_id;
  double estimated_jaccard = 0.0;
};

struct LeakReport {
  std::vector<LeakEntry> leaks;
  std::vector<pipeline::Sample> valid;  // with leaking items removed
  std::vector<pipeline::Sample> test;
};

/// Flags validation/test items that duplicate (exactly or above threshold)
/// some training item; training data is never modified.
LeakReport cross_split_check(const std::vector<pipeline::Sample>& train, const std::vector<pipeline::Sample>& valid,
                             const std::vector<pipeline::Sample>& test, const DedupConfig& config = {});

std::string leak_report_to_json(const std::vector<LeakEntry>& leaks);
std::string dedup_result_to_json(const DedupResult& result);

}  // namespace ttune::data
