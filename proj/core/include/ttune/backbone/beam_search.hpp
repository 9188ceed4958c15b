// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <vector>

namespace ttune::backbone {

/// Log-probabilities of the next token given the generated prefix (which
/// excludes BOS).
using NextLogProbs = std::function<std::vector<double>(const std::vector<std::size_t>& prefix)>;

struct Hypothesis {
  std::vector<std::size_t> tokens;  // EOS excluded
  double log_prob = 0.0;
  /// log_prob divided by the number of generated steps (EOS included).
  double score = 0.0;
  bool finished = false;
};

/// Length-normalised beam search with early stopping: decoding ends once
/// `beam` hypotheses have emitted EOS, or after `max_len` steps. Candidates
/// with equal cumulative log-probability are ordered by lower token ids.
/// beam = 1 is greedy decoding; for wider beams the greedy hypothesis is also
/// a final candidate, so the result never scores below greedy.
Hypothesis beam_search(const NextLogProbs& next, std::size_t eos, std::size_t max_len, std::size_t beam);

/// Normalised score of a fixed continuation under `next`, for comparisons.
Hypothesis score_sequence(const NextLogProbs& next, const std::vector<std::size_t>& tokens, std::size_t eos,
                          bool finished);

}  // namespace ttune::backbone
