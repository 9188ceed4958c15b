// SPDX-License-Identifier: Apache-2.0
#include "ttune/pipeline/bleu.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ttune/error.hpp"
#include "ttune/text/tokenize.hpp"

namespace ttune::pipeline {
namespace {

using Ngram = std::vector<std::string>;

std::map<Ngram, std::size_t> count_ngrams(const std::vector<std::string>& tokens, std::size_t n) {
  std::map<Ngram, std::size_t> counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) ++counts[Ngram(tokens.begin() + i, tokens.begin() + i + n)];
  return counts;
}

}  // namespace

BleuStats corpus_bleu(const std::vector<std::vector<std::string>>& hypotheses,
                      const std::vector<std::vector<std::string>>& references) {
  if (hypotheses.size() != references.size()) {
    fail(ErrorKind::LengthMismatch, std::to_string(hypotheses.size()) + " hypotheses for " +
                                        std::to_string(references.size()) + " references");
  }
  if (references.empty()) fail(ErrorKind::EmptyInput, "BLEU needs at least one reference");
  std::array<std::size_t, 4> matches{}, totals{};
  BleuStats stats;
  for (std::size_t s = 0; s < hypotheses.size(); ++s) {
    stats.hypothesis_length += hypotheses[s].size();
    stats.reference_length += references[s].size();
    for (std::size_t n = 1; n <= 4; ++n) {
      const auto hyp = count_ngrams(hypotheses[s], n);
      const auto ref = count_ngrams(references[s], n);
      for (const auto& [gram, count] : hyp) {
        auto it = ref.find(gram);
        matches[n - 1] += std::min(count, it == ref.end() ? std::size_t{0} : it->second);
        totals[n - 1] += count;
      }
    }
  }
  for (std::size_t n = 0; n < 4; ++n) {
    const double smooth = n == 0 ? 0.0 : 1.0;
    const double den = static_cast<double>(totals[n]) + smooth;
    stats.precisions[n] = den > 0.0 ? (static_cast<double>(matches[n]) + smooth) / den : 0.0;
  }
  if (stats.hypothesis_length == 0 || matches[0] == 0) return stats;
  const double c = static_cast<double>(stats.hypothesis_length);
  const double r = static_cast<double>(stats.reference_length);
  stats.brevity_penalty = c < r ? std::exp(1.0 - r / c) : 1.0;
  double log_sum = 0.0;
  for (double p : stats.precisions) log_sum += std::log(p);
  stats.score = 100.0 * stats.brevity_penalty * std::exp(log_sum / 4.0);
  return stats;
}

double smoothed_bleu(const std::vector<std::string>& hypotheses, const std::vector<std::string>& references) {
  if (hypotheses.size() != references.size()) {
    fail(ErrorKind::LengthMismatch, std::to_string(hypotheses.size()) + " hypotheses for " +
                                        std::to_string(references.size()) + " references");
  }
  std::vector<std::vector<std::string>> hyp, ref;
  hyp.reserve(hypotheses.size());
  ref.reserve(references.size());
  for (const auto& h : hypotheses) hyp.push_back(split_tokens(h));
  for (const auto& r : references) ref.push_back(split_tokens(r));
  return corpus_bleu(hyp, ref).score;
}

}  // namespace ttune::pipeline
