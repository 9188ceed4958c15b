// SPDX-License-Identifier: Apache-2.0
#include "ttune/backbone/beam_search.hpp"

#include <algorithm>

#include "ttune/error.hpp"

namespace ttune::backbone {
namespace {

bool better(const Hypothesis& a, const Hypothesis& b, bool by_score) {
  const double sa = by_score ? a.score : a.log_prob;
  const double sb = by_score ? b.score : b.log_prob;
  if (sa != sb) return sa > sb;
  return a.tokens < b.tokens;
}

double normalise(double log_prob, std::size_t steps) { return log_prob / static_cast<double>(std::max<std::size_t>(steps, 1)); }

}  // namespace

Hypothesis beam_search(const NextLogProbs& next, std::size_t eos, std::size_t max_len, std::size_t beam) {
  if (beam == 0 || max_len == 0) fail(ErrorKind::OutOfRange, "beam and max_len must be >= 1");
  std::vector<Hypothesis> live{Hypothesis{}};
  std::vector<Hypothesis> finished;
  for (std::size_t step = 0; step < max_len && !live.empty(); ++step) {
    std::vector<Hypothesis> candidates;
    for (const auto& h : live) {
      const auto lp = next(h.tokens);
      for (std::size_t t = 0; t < lp.size(); ++t) {
        Hypothesis c;
        c.tokens = h.tokens;
        c.log_prob = h.log_prob + lp[t];
        if (t == eos) {
          c.finished = true;
        } else {
          c.tokens.push_back(t);
        }
        c.score = normalise(c.log_prob, step + 1);
        candidates.push_back(std::move(c));
      }
    }
    std::stable_sort(candidates.begin(), candidates.end(), [](const Hypothesis& a, const Hypothesis& b) {
      if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
      if (a.tokens != b.tokens) return a.tokens < b.tokens;
      return !a.finished && b.finished;
    });
    std::vector<Hypothesis> next_live;
    for (auto& c : candidates) {
      if (next_live.size() == beam) break;
      if (c.finished) {
        finished.push_back(std::move(c));
      } else {
        next_live.push_back(std::move(c));
      }
    }
    live = std::move(next_live);
    if (finished.size() >= beam) break;
  }
  for (auto& h : live) {
    h.score = normalise(h.log_prob, h.tokens.size());
    finished.push_back(std::move(h));
  }
  // Plain beam search can prune the greedy path; keep it in the final pool
  // so a wider beam never returns a worse score than beam = 1.
  if (beam > 1) finished.push_back(beam_search(next, eos, max_len, 1));
  return *std::min_element(finished.begin(), finished.end(),
                           [](const Hypothesis& a, const Hypothesis& b) { return better(a, b, true); });
}

Hypothesis score_sequence(const NextLogProbs& next, const std::vector<std::size_t>& tokens, std::size_t eos,
                          bool finished) {
  Hypothesis h;
  std::vector<std::size_t> prefix;
  for (std::size_t t : tokens) {
    h.log_prob += next(prefix).at(t);
    prefix.push_back(t);
  }
  std::size_t steps = tokens.size();
  if (finished) {
    h.log_prob += next(prefix).at(eos);
    ++steps;
  }
  h.tokens = tokens;
  h.finished = finished;
  h.score = normalise(h.log_prob, steps);
  return h;
}

}  // namespace ttune::backbone
