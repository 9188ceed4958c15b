// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>
#include <vector>

namespace ttune::pipeline {

struct BleuStats {
  std::array<double, 4> precisions{};
  double brevity_penalty = 0.0;
  std::size_t hypothesis_length = 0;
  std::size_t reference_length = 0;
  double score = 0.0;  // 0..100
};

/// Corpus BLEU-4 with uniform weights. Clipped n-gram counts are summed over
/// the corpus; orders 2..4 get add-one smoothing on numerator and
/// denominator; brevity penalty exp(1 - r/c) when c < r. A corpus without a
/// single unigram match (or an empty hypothesis side) scores 0.
BleuStats corpus_bleu(const std::vector<std::vector<std::string>>& hypotheses,
                      const std::vector<std::vector<std::string>>& references);

/// Tokenizes both sides with split_tokens and returns the 0..100 score.
/// Throws LengthMismatch when the lists differ in length.
double smoothed_bleu(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references);

}  // namespace ttune::pipeline
