// SPDX-License-Identifier: Apache-2.0
#include "ttune/data/dedup.hpp"

#include <map>
#include <optional>

#include <json.hpp>

#include "ttune/error.hpp"

namespace ttune::data {

namespace {

std::size_t rows_per_band(const DedupConfig& c) {
  if (c.bands == 0 || c.permutations % c.bands != 0) {
    fail(ErrorKind::InvalidConfig, std::to_string(c.permutations) + " permutations do not split into " +
                                       std::to_string(c.bands) + " bands");
  }
  return c.permutations / c.bands;
}

MinHashSignature sign(const pipeline::Sample& s, const DedupConfig& c) {
  return minhash(token_set(s.code), c.permutations, c.seed, s.id);
}

struct Match {
  std::size_t index;
  double estimate;
};

// Best candidate above threshold: highest estimate, earliest item on ties.
std::optional<Match> best_match(const LshIndex& index, const std::vector<MinHashSignature>& signatures,
                                const MinHashSignature& sig, double threshold) {
  std::optional<Match> best;
  for (std::size_t c : index.candidates(sig)) {
    const double est = estimate_jaccard(signatures[c], sig);
    if (est > threshold && (!best || est > best->estimate)) best = Match{c, est};
  }
  return best;
}

}  // namespace

DedupResult dedup(const std::vector<pipeline::Sample>& corpus, const DedupConfig& config) {
  const std::size_t rows = rows_per_band(config);
  DedupResult result;
  std::map<std::string, std::size_t> exact;
  std::vector<std::size_t> survivors;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    auto [it, inserted] = exact.emplace(corpus[i].code, i);
    if (inserted) {
      survivors.push_back(i);
    } else {
      result.removed.push_back({corpus[i].id, corpus[it->second].id, 1.0, true});
    }
  }

  LshIndex index(config.bands, rows);
  std::vector<MinHashSignature> signatures(corpus.size());
  for (std::size_t i : survivors) {
    MinHashSignature sig = sign(corpus[i], config);
    if (auto m = best_match(index, signatures, sig, config.threshold)) {
      result.removed.push_back({corpus[i].id, corpus[m->index].id, m->estimate, false});
      continue;
    }
    index.insert(i, sig);
    signatures[i] = std::move(sig);
    result.retained.push_back(i);
  }
  return result;
}

LeakReport cross_split_check(const std::vector<pipeline::Sample>& train, const std::vector<pipeline::Sample>& valid,
                             const std::vector<pipeline::Sample>& test, const DedupConfig& config) {
  const std::size_t rows = rows_per_band(config);
  std::map<std::string, std::size_t> exact;
  LshIndex index(config.bands, rows);
  std::vector<MinHashSignature> signatures;
  signatures.reserve(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    exact.emplace(train[i].code, i);
    signatures.push_back(sign(train[i], config));
    index.insert(i, signatures.back());
  }

  LeakReport report;
  auto scan = [&](const std::vector<pipeline::Sample>& split, const char* name, std::vector<pipeline::Sample>& kept) {
    for (const auto& s : split) {
      if (auto it = exact.find(s.code); it != exact.end()) {
        report.leaks.push_back({name, s.id, train[it->second].id, 1.0});
        continue;
      }
      if (auto m = best_match(index, signatures, sign(s, config), config.threshold)) {
        report.leaks.push_back({name, s.id, train[m->index].id, m->estimate});
        continue;
      }
      kept.push_back(s);
    }
  };
  scan(valid, "valid", report.valid);
  scan(test, "test", report.test);
  return report;
}

std::string leak_report_to_json(const std::vector<LeakEntry>& leaks) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& l : leaks) {
    out.push_back({{"kept_split", l.kept_split},
                   {"removed_id", l.removed_id},
                   {"matched_train_id", l.matched_train_id},
                   {"estimated_jaccard", l.estimated_jaccard}});
  }
  return out.dump(2) + "\n";
}

std::string dedup_result_to_json(const DedupResult& result) {
  nlohmann::json removed = nlohmann::json::array();
  for (const auto& r : result.removed) {
    removed.push_back({{"removed_id", r.removed_id},
                       {"kept_id", r.kept_id},
                       {"estimated_jaccard", r.estimated_jaccard},
                       {"stage", r.exact ? "exact" : "near"}});
  }
  return nlohmann::json{{"retained", result.retained.size()}, {"removed", removed}}.dump(2) + "\n";
}

}  // namespace ttune::data
