// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <set>

#include "support.hpp"
#include "ttune/cpg/cpg.hpp"
#include "ttune/data/dedup.hpp"
#include "ttune/data/minhash.hpp"
#include "ttune/data/stats.hpp"
#include "ttune/data/synth.hpp"
#include "ttune/error.hpp"
#include "ttune/numerics/random.hpp"
#include "ttune/pipeline/dataset.hpp"

using namespace ttune;
using namespace ttune::data;
using pipeline::Sample;
using ttune::test::error_kind_of;

namespace {

std::vector<std::string> random_tokens(Rng& rng, std::size_t n, std::size_t universe) {
  std::set<std::string> s;
  while (s.size() < n) s.insert("t" + std::to_string(rng.index(universe)));
  return {s.begin(), s.end()};
}

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) out += t + " ";
  return out;
}

// Replaces `changes` tokens with fresh ones never used elsewhere.
std::vector<std::string> perturb(std::vector<std::string> tokens, std::size_t changes, Rng& rng, int& fresh) {
  for (std::size_t k = 0; k < changes; ++k) tokens[rng.index(tokens.size())] = "fresh" + std::to_string(fresh++);
  return tokens;
}

double true_j(const Sample& a, const Sample& b) { return exact_jaccard(token_set(a.code), token_set(b.code)); }

}  // namespace

TEST_CASE("minhash examples") {
  const TokenSet abc{"a", "b", "c"};
  CHECK(minhash(abc).values.size() == 128);
  CHECK(minhash(abc).values == minhash(TokenSet{"c", "b", "a"}).values);
  CHECK(estimate_jaccard(minhash(abc), minhash(abc)) == 1.0);
  CHECK(minhash(abc, 128, 1).values != minhash(abc, 128, 2).values);

  Rng rng(1);
  const auto x = random_tokens(rng, 50, 100000);
  std::vector<std::string> y;
  for (const auto& t : x) y.push_back(t + "_other");
  const TokenSet xs(x.begin(), x.end()), ys(y.begin(), y.end());
  CHECK(exact_jaccard(xs, ys) == 0.0);
  CHECK(estimate_jaccard(minhash(xs), minhash(ys)) <= 0.05);

  const TokenSet bcd{"b", "c", "d"};
  CHECK(exact_jaccard(abc, bcd) == 0.5);
  CHECK(std::abs(estimate_jaccard(minhash(abc), minhash(bcd)) - 0.5) <= 0.15);

  CHECK(error_kind_of([] { minhash(TokenSet{}); }) == ErrorKind::EmptyTokenSet);
  CHECK(token_set("x = a ( ) ; x") == TokenSet{"x", "=", "a", "(", ")", ";"});
}

TEST_CASE("property: minhash estimates converge") {
  Rng rng(2);
  std::size_t within = 0;
  const std::size_t pairs = 1000;
  for (std::size_t i = 0; i < pairs; ++i) {
    const auto universe = 20 + rng.index(200);
    const auto a = random_tokens(rng, 1 + rng.index(15), universe);
    const auto b = random_tokens(rng, 1 + rng.index(15), universe);
    const TokenSet as(a.begin(), a.end()), bs(b.begin(), b.end());
    const double err = std::abs(estimate_jaccard(minhash(as), minhash(bs)) - exact_jaccard(as, bs));
    within += err <= 0.1;
  }
  MESSAGE(within << " / " << pairs << " pairs within 0.1");
  CHECK(within >= 950);
}

TEST_CASE("lsh index") {
  LshIndex index(16, 8);
  const auto sig = minhash(TokenSet{"a", "b"});
  index.insert(7, sig);
  CHECK(index.bucket_count(7) == 16);
  CHECK(index.candidates(sig) == std::vector<std::size_t>{7});
  CHECK(index.candidates(minhash(TokenSet{"zz", "yy"})).empty());
  CHECK(error_kind_of([&] { index.insert(8, minhash(TokenSet{"a"}, 64)); }) == ErrorKind::InvalidConfig);
}

TEST_CASE("property: lsh recall above 0.85") {
  Rng rng(3);
  int fresh = 0;
  std::size_t pairs = 0, found = 0;
  while (pairs < 500) {
    const auto base = random_tokens(rng, 40, 100000);
    const auto near = perturb(base, 1 + rng.index(2), rng, fresh);
    const TokenSet a(base.begin(), base.end()), b(near.begin(), near.end());
    if (exact_jaccard(a, b) < 0.85) continue;
    ++pairs;
    const auto seed = rng.next();
    LshIndex index(16, 8);
    index.insert(0, minhash(a, 128, seed));
    found += !index.candidates(minhash(b, 128, seed)).empty();
  }
  MESSAGE(found << " / " << pairs);
  CHECK(static_cast<double>(found) >= 0.99 * static_cast<double>(pairs));
}

TEST_CASE("dedup") {
  Rng rng(4);
  int fresh = 0;
  SUBCASE("exact duplicate removed in stage 1") {
    const std::string code = join(random_tokens(rng, 20, 10000));
    const std::vector<Sample> c{{"a", code, "x"}, {"b", join(random_tokens(rng, 20, 10000)), "y"}, {"c", code, "z"}};
    const auto r = dedup(c);
    CHECK(r.retained == std::vector<std::size_t>{0, 1});
    REQUIRE(r.removed.size() == 1);
    CHECK(r.removed[0].removed_id == "c");
    CHECK(r.removed[0].kept_id == "a");
    CHECK(r.removed[0].exact);
  }
  SUBCASE("planted near duplicate removed in stage 2") {
    const auto base = random_tokens(rng, 40, 10000);
    const std::vector<Sample> c{{"a", join(base), ""},
                                {"b", join(random_tokens(rng, 40, 10000)), ""},
                                {"c", join(perturb(base, 2, rng, fresh)), ""}};
    REQUIRE(true_j(c[0], c[2]) >= 0.9);
    REQUIRE(true_j(c[0], c[1]) < 0.5);
    const auto r = dedup(c);
    CHECK(r.retained == std::vector<std::size_t>{0, 1});
    REQUIRE(r.removed.size() == 1);
    CHECK_FALSE(r.removed[0].exact);
    CHECK(r.removed[0].estimated_jaccard > 0.8);
  }
  SUBCASE("distinct corpus fully retained") {
    std::vector<Sample> c;
    for (int i = 0; i < 60; ++i) c.push_back({std::to_string(i), join(random_tokens(rng, 30, 3000)), ""});
    for (std::size_t i = 0; i < c.size(); ++i)
      for (std::size_t j = i + 1; j < c.size(); ++j) REQUIRE(true_j(c[i], c[j]) < 0.5);
    const auto r = dedup(c);
    CHECK(r.retained.size() == c.size());
    CHECK(r.removed.empty());
  }
  SUBCASE("first occurrence wins and results are stable") {
    const auto base = random_tokens(rng, 40, 10000);
    std::vector<Sample> c;
    for (int i = 0; i < 5; ++i) c.push_back({std::to_string(i), join(perturb(base, 1, rng, fresh)), ""});
    const auto r = dedup(c);
    CHECK(r.retained.front() == 0);
    CHECK(dedup(c).retained == r.retained);
    CHECK(dedup_result_to_json(dedup(c)) == dedup_result_to_json(r));
  }
}

TEST_CASE("property: retained pairs are below threshold") {
  Rng rng(5);
  int fresh = 0;
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<std::vector<std::string>> bases;
    std::vector<Sample> c;
    for (int i = 0; i < 100; ++i) {
      if (!bases.empty() && rng.chance(0.4)) {
        const auto& b = bases[rng.index(bases.size())];
        c.push_back({std::to_string(i), join(perturb(b, rng.index(12), rng, fresh)), ""});
      } else {
        bases.push_back(random_tokens(rng, 30, 2000));
        c.push_back({std::to_string(i), join(bases.back()), ""});
      }
    }
    const auto r = dedup(c);
    for (std::size_t x = 0; x < r.retained.size(); ++x) {
      for (std::size_t y = x + 1; y < r.retained.size(); ++y) {
        const auto& a = c[r.retained[x]];
        const auto& b = c[r.retained[y]];
        CHECK(estimate_jaccard(minhash(token_set(a.code)), minhash(token_set(b.code))) <= 0.8);
        CHECK(true_j(a, b) <= 0.9);
      }
    }
  }
}

TEST_CASE("cross-split check") {
  Rng rng(6);
  int fresh = 0;
  std::vector<Sample> train, test;
  for (int i = 0; i < 50; ++i) train.push_back({"tr" + std::to_string(i), join(random_tokens(rng, 30, 5000)), ""});
  SUBCASE("copied item") {
    test = {{"te0", train[3].code, ""}, {"te1", join(random_tokens(rng, 30, 5000)), ""}};
    const auto r = cross_split_check(train, {}, test);
    REQUIRE(r.leaks.size() == 1);
    CHECK(r.leaks[0].kept_split == "test");
    CHECK(r.leaks[0].removed_id == "te0");
    CHECK(r.leaks[0].matched_train_id == "tr3");
    CHECK(r.test.size() == 1);
    CHECK(r.test[0].id == "te1");
    CHECK(leak_report_to_json(r.leaks).find("\"matched_train_id\"") != std::string::npos);
  }
  SUBCASE("no overlap") {
    std::vector<Sample> valid{{"v0", "completely different words here", ""}};
    const auto r = cross_split_check(train, valid, {});
    CHECK(r.leaks.empty());
    CHECK(r.valid == valid);
  }
  SUBCASE("planted leaks agree with the all-pairs oracle") {
    for (int i = 0; i < 50; ++i) {
      if (i % 10 == 0) {
        const TokenSet src = token_set(train[rng.index(train.size())].code);
        const std::vector<std::string> toks(src.begin(), src.end());
        test.push_back({"te" + std::to_string(i), join(perturb(toks, 1, rng, fresh)), ""});
      } else {
        test.push_back({"te" + std::to_string(i), join(random_tokens(rng, 30, 5000)), ""});
      }
    }
    std::set<std::string> oracle;
    for (const auto& t : test)
      for (const auto& tr : train)
        if (true_j(t, tr) >= 0.85) oracle.insert(t.id);
    CHECK(oracle.size() == 5);
    const auto r = cross_split_check(train, {}, test);
    std::set<std::string> found;
    for (const auto& l : r.leaks) found.insert(l.removed_id);
    for (const auto& id : oracle) CHECK(found.count(id) == 1);
    CHECK(r.test.size() == test.size() - found.size());
    // Training data is never touched: no leak names a training id as removed.
    for (const auto& l : r.leaks) CHECK(l.removed_id.starts_with("te"));
  }
}

TEST_CASE("dataset stats") {
  CHECK(dataset_stats({}).total == 0);
  CHECK(dataset_stats({}).avg_nodes == 0.0);
  CHECK(dataset_stats({}).max_edges == 0);

  const Sample branch{"l", test::kBranchProgram, "a b"};
  const auto one = dataset_stats({branch});
  CHECK(one.avg_nodes == 6.0);
  CHECK(one.max_nodes == 6);

  // Hand counts. Branch program: 6 nodes; 4 AST + 6 CFG + 2 CDG + 1 DDG edges;
  // 21 code tokens. "def f(): g()": ENTRY, g(), EXIT; AST 0-1, CFG 0-1 and
  // 1-2; 8 tokens. The third does not parse: 4 tokens, no graph.
  const Sample small{"s", "def f():\n    g()\n", "g"};
  const Sample broken{"b", "def f(:", "x"};
  const auto st = dataset_stats({branch, small, broken});
  CHECK(st.total == 3);
  CHECK(st.unparsable == 1);
  CHECK(st.avg_nodes == doctest::Approx(4.5));
  CHECK(st.avg_edges == doctest::Approx(8.0));
  CHECK(st.max_nodes == 6);
  CHECK(st.max_edges == 13);
  CHECK(st.avg_input_tokens == doctest::Approx(11.0));
  CHECK(st.max_input_tokens == 21);
  CHECK(st.avg_target_tokens == doctest::Approx(4.0 / 3.0));
  CHECK(st.max_target_tokens == 2);
  CHECK(stats_to_text(st).find("Max #Node            6") != std::string::npos);
  CHECK(stats_to_json(st).find("\"unparsable\": 1") != std::string::npos);
}

TEST_CASE("synthetic corpus") {
  CHECK(true_path_calls(test::kBranchProgram) == "a b");
  CHECK(true_path_calls("def f():\n    while x:\n        g()\n    if y:\n        h()\n    else:\n        k()\n") ==
        "g h");

  const auto a = synth_corpus(40, 8);
  CHECK(pipeline::to_jsonl(a) == pipeline::to_jsonl(synth_corpus(40, 8)));
  CHECK(pipeline::to_jsonl(a) != pipeline::to_jsonl(synth_corpus(40, 18)));
  CHECK(a[0].id == "synth-8-0");
  for (const auto& s : a) {
    CHECK_FALSE(s.target.empty());
    CHECK(cpg::build_cpg(s.code).nodes.size() <= 50);
    CHECK(true_path_calls(s.code) == s.target);
  }
  const auto single = synth_corpus(1, 3);
  const auto text = pipeline::to_jsonl(single);
  CHECK(std::count(text.begin(), text.end(), '\n') == 1);
  CHECK(pipeline::parse_jsonl(text) == single);
  CHECK(error_kind_of([] { synth_corpus(0, 1); }) == ErrorKind::InvalidConfig);
}
