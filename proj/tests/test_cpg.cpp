// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <queue>
#include <set>

#include "support.hpp"
#include "ttune/cpg/ast.hpp"
#include "ttune/cpg/cpg.hpp"
#include "ttune/error.hpp"
#include "ttune/pipeline/dataset.hpp"
#include "ttune/text/tokenize.hpp"

using namespace ttune;
using namespace ttune::cpg;
using ttune::test::kBranchProgram;

namespace {

using EdgeSet = std::set<std::tuple<EdgeKind, std::size_t, std::size_t, std::string>>;

EdgeSet edge_set(const Cpg& g, std::optional<EdgeKind> only = std::nullopt) {
  EdgeSet out;
  for (const auto& e : g.edges)
    if (!only || e.kind == *only) out.insert({e.kind, e.src, e.dst, e.var.value_or("")});
  return out;
}

const CpgNode& node_labelled(const Cpg& g, const std::string& label) {
  auto it = std::find_if(g.nodes.begin(), g.nodes.end(), [&](const CpgNode& n) { return n.label == label; });
  REQUIRE(it != g.nodes.end());
  return *it;
}

bool has_edge(const Cpg& g, EdgeKind kind, const std::string& from, const std::string& to,
              std::optional<std::string> var = std::nullopt) {
  const std::size_t s = node_labelled(g, from).id, d = node_labelled(g, to).id;
  return std::any_of(g.edges.begin(), g.edges.end(),
                     [&](const CpgEdge& e) { return e.kind == kind && e.src == s && e.dst == d && e.var == var; });
}

/// Brute-force isomorphism: some kind- and label-preserving bijection maps
/// the edge multiset of `a` onto that of `b`.
bool isomorphic(const Cpg& a, const Cpg& b) {
  if (a.nodes.size() != b.nodes.size() || a.edges.size() != b.edges.size()) return false;
  std::vector<std::size_t> perm(a.nodes.size());
  std::iota(perm.begin(), perm.end(), 0);
  const EdgeSet target = edge_set(b);
  do {
    bool ok = true;
    for (std::size_t i = 0; i < perm.size() && ok; ++i)
      ok = a.nodes[i].kind == b.nodes[perm[i]].kind && a.nodes[i].label == b.nodes[perm[i]].label;
    if (!ok) continue;
    EdgeSet mapped;
    for (const auto& e : a.edges) mapped.insert({e.kind, perm[e.src], perm[e.dst], e.var.value_or("")});
    if (mapped == target) return true;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return false;
}

// Random program generator. Variables and callees come from disjoint name
// sets so the oracle can read defs/uses off the node labels.
const std::vector<std::string> kVars{"p", "q", "r", "s"};
const std::vector<std::string> kCallees{"f", "g", "h"};

struct GenOptions {
  bool loops = true;
  std::size_t max_statements = 10;
  std::size_t max_branches = 3;
};

struct Generated {
  std::string source;
  // Per statement node in preorder: innermost enclosing predicate
  // (preorder index) and branch; nullopt at top level.
  std::vector<std::optional<std::pair<std::size_t, bool>>> control;
  std::size_t params = 0;
};

class ProgramGen {
 public:
  ProgramGen(Rng& rng, GenOptions opt) : rng_(rng), opt_(opt) {}

  Generated run() {
    Generated g;
    g.params = rng_.index(3);
    std::string header = "def fn(";
    for (std::size_t i = 0; i < g.params; ++i) header += (i ? ", " : "") + kVars[i];
    header += "):\n";
    out_ = &g;
    std::string body = block(1, std::nullopt, true);
    g.source = header + body;
    return g;
  }

 private:
  std::string var() { return kVars[rng_.index(kVars.size())]; }
  std::string atom() { return rng_.chance(0.6) ? var() : std::to_string(rng_.index(20)); }
  std::string expr() {
    if (rng_.chance(0.3)) return kCallees[rng_.index(kCallees.size())] + "(" + (rng_.chance(0.5) ? atom() : "") + ")";
    if (rng_.chance(0.5)) return atom() + " + " + atom();
    return atom();
  }
  std::string cond() { return atom().append(rng_.chance(0.5) ? " < " : " > ").append(atom()); }

  std::string block(int depth, std::optional<std::pair<std::size_t, bool>> control, bool top) {
    std::string pad(static_cast<std::size_t>(depth) * 4, ' ');
    std::string text;
    const std::size_t n = 1 + rng_.index(3);
    for (std::size_t i = 0; i < n && statements_ < opt_.max_statements; ++i) {
      const std::size_t me = out_->control.size();
      const double roll = rng_.uniform();
      ++statements_;
      if (roll < 0.25 && branches_ < opt_.max_branches && depth < 4) {
        ++branches_;
        out_->control.push_back(control);
        const bool is_loop = opt_.loops && rng_.chance(0.3);
        text += pad + (is_loop ? "while " : "if ") + cond() + ":\n";
        text += block(depth + 1, std::pair{me, true}, false);
        if (!is_loop && rng_.chance(0.5)) {
          text += pad + "else:\n";
          text += block(depth + 1, std::pair{me, false}, false);
        }
      } else if (roll < 0.45) {
        out_->control.push_back(control);
        text += pad + kCallees[rng_.index(kCallees.size())] + "(" + (rng_.chance(0.6) ? atom() : "") + ")\n";
      } else {
        out_->control.push_back(control);
        text += pad + var() + " = " + expr() + "\n";
      }
    }
    if (text.empty()) {
      out_->control.push_back(control);
      ++statements_;
      text = pad + var() + " = 1\n";
    }
    if (top && rng_.chance(0.3)) {
      out_->control.push_back(control);
      text += pad + "return " + atom() + "\n";
    }
    return text;
  }

  Rng& rng_;
  GenOptions opt_;
  Generated* out_ = nullptr;
  std::size_t statements_ = 0;
  std::size_t branches_ = 0;
};

bool is_var(const std::string& t) { return std::find(kVars.begin(), kVars.end(), t) != kVars.end(); }

// Defs and uses read off the statement text alone.
void label_facts(const CpgNode& n, std::set<std::string>& defs, std::set<std::string>& uses) {
  const auto toks = split_tokens(n.label);
  if (n.kind == NodeKind::Param) {
    defs.insert(n.label);
    return;
  }
  std::size_t start = 0;
  if (n.kind == NodeKind::Decl) {
    defs.insert(toks.at(0));
    start = 2;
  }
  for (std::size_t i = start; i < toks.size(); ++i)
    if (is_var(toks[i])) uses.insert(toks[i]);
}

std::vector<std::vector<std::size_t>> cfg_successors(const Cpg& g) {
  std::vector<std::vector<std::size_t>> succ(g.nodes.size());
  for (const auto& e : g.edges_of(EdgeKind::Cfg)) succ[e.src].push_back(e.dst);
  return succ;
}

// Oracle 1 (acyclic CFGs): enumerate every ENTRY->EXIT path and record
// (def, use) pairs where the definition reaches the use un-killed.
EdgeSet ddg_by_paths(const Cpg& g) {
  const auto succ = cfg_successors(g);
  std::vector<std::set<std::string>> defs(g.nodes.size()), uses(g.nodes.size());
  for (const auto& n : g.nodes) label_facts(n, defs[n.id], uses[n.id]);
  EdgeSet out;
  std::vector<std::size_t> path;
  std::function<void(std::size_t)> walk = [&](std::size_t v) {
    path.push_back(v);
    if (succ[v].empty()) {
      std::map<std::string, std::size_t> live;
      for (std::size_t u : path) {
        for (const auto& x : uses[u])
          if (auto it = live.find(x); it != live.end()) out.insert({EdgeKind::Ddg, it->second, u, x});
        for (const auto& x : defs[u]) live[x] = u;
      }
    }
    for (std::size_t w : succ[v]) walk(w);
    path.pop_back();
  };
  walk(g.entry());
  return out;
}

// Oracle 2 (any CFG): definition at d reaches use at u iff u is reachable
// from d through nodes that do not redefine the variable.
EdgeSet ddg_by_reachability(const Cpg& g) {
  const auto succ = cfg_successors(g);
  std::vector<std::set<std::string>> defs(g.nodes.size()), uses(g.nodes.size());
  for (const auto& n : g.nodes) label_facts(n, defs[n.id], uses[n.id]);
  EdgeSet out;
  for (std::size_t d = 0; d < g.nodes.size(); ++d) {
    for (const auto& x : defs[d]) {
      std::vector<bool> seen(g.nodes.size(), false);
      std::queue<std::size_t> q;
      for (std::size_t w : succ[d]) q.push(w);
      while (!q.empty()) {
        const std::size_t v = q.front();
        q.pop();
        if (seen[v]) continue;
        seen[v] = true;
        if (uses[v].count(x)) out.insert({EdgeKind::Ddg, d, v, x});
        if (defs[v].count(x)) continue;
        for (std::size_t w : succ[v]) q.push(w);
      }
    }
  }
  return out;
}

std::vector<bool> reachable(const std::vector<std::vector<std::size_t>>& succ, std::size_t from) {
  std::vector<bool> seen(succ.size(), false);
  std::vector<std::size_t> stack{from};
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    if (seen[v]) continue;
    seen[v] = true;
    for (std::size_t w : succ[v]) stack.push_back(w);
  }
  return seen;
}

}  // namespace

TEST_CASE("parse the branch program") {
  const Program p = parse(kBranchProgram);
  REQUIRE(p.functions.size() == 1);
  const AstNode& fn = p.functions[0];
  CHECK(fn.kind == AstKind::FuncDef);
  CHECK(fn.name == "main");
  const AstNode& body = fn.children.back();
  REQUIRE(body.kind == AstKind::Block);
  REQUIRE(body.children.size() == 2);
  CHECK(body.children[0].kind == AstKind::Assign);
  CHECK(body.children[0].text == "x = a()");
  const AstNode& branch = body.children[1];
  CHECK(branch.kind == AstKind::If);
  CHECK(branch.children[0].text == "x > 10");
  REQUIRE(branch.children[1].children.size() == 2);
  CHECK(branch.children[1].children[0].kind == AstKind::Assign);
  CHECK(branch.children[1].children[1].kind == AstKind::Call);
  CHECK(branch.children[1].children[1].line == 5);
}

TEST_CASE("parse basics and errors") {
  const Program p = parse("def f():\n    return 1");
  REQUIRE(p.functions[0].children.back().children.size() == 1);
  CHECK(p.functions[0].children.back().children[0].kind == AstKind::Return);

  try {
    parse("def f(:");
    FAIL("expected SyntaxError");
  } catch (const SyntaxError& e) {
    CHECK(e.line() == 1);
  }
  auto line_of = [](const char* src) {
    try {
      parse(src);
    } catch (const SyntaxError& e) {
      return e.line();
    }
    return 0;
  };
  CHECK(line_of("def f():\n    x = 1\n      y = 2\n") == 3);
  CHECK(line_of("def f():\n    if x >:\n        y = 1\n") == 2);
  CHECK(line_of("") == 1);
  CHECK(line_of("def f():\n    x = (1\n") == 2);
  try {
    build_cpg("def f():\n    return 1\n    x = 2\n");
    FAIL("expected SyntaxError");
  } catch (const SyntaxError& e) {
    CHECK(e.line() == 3);
  }
}

TEST_CASE("source text is the exact slice") {
  const std::string src = "def g(a, b):\n    c = h(a, b) * 2\n    while c > 0:\n        c = c - 1\n    return c\n";
  const Program p = parse(src);
  std::function<void(const AstNode&)> check = [&](const AstNode& n) {
    CHECK(src.find(n.text) != std::string::npos);
    for (const auto& c : n.children) check(c);
  };
  check(p.functions[0]);
}

TEST_CASE("control flow examples") {
  const Cpg g = build_cpg(kBranchProgram);
  CHECK(has_edge(g, EdgeKind::Cfg, "ENTRY", "x = a()"));
  CHECK(has_edge(g, EdgeKind::Cfg, "x = a()", "x > 10"));
  CHECK(has_edge(g, EdgeKind::Cfg, "x > 10", "x = 0"));
  CHECK(has_edge(g, EdgeKind::Cfg, "x = 0", "b()"));
  CHECK(has_edge(g, EdgeKind::Cfg, "x > 10", "EXIT"));
  CHECK(has_edge(g, EdgeKind::Cfg, "b()", "EXIT"));
  CHECK(g.edges_of(EdgeKind::Cfg).size() == 6);

  const Cpg line = build_cpg("def f():\n    x = 1\n    y = 2\n");
  CHECK(edge_set(line, EdgeKind::Cfg) == EdgeSet{{EdgeKind::Cfg, 0, 1, ""}, {EdgeKind::Cfg, 1, 2, ""},
                                               {EdgeKind::Cfg, 2, 3, ""}});

  const Cpg loop = build_cpg("def f(n):\n    while n > 0:\n        n = n - 1\n");
  CHECK(has_edge(loop, EdgeKind::Cfg, "n = n - 1", "n > 0"));
  CHECK(has_edge(loop, EdgeKind::Cfg, "n > 0", "EXIT"));
}

TEST_CASE("control dependence examples") {
  const Cpg g = build_cpg(kBranchProgram);
  CHECK(edge_set(g, EdgeKind::CdgTrue) ==
        EdgeSet{{EdgeKind::CdgTrue, 2, 3, ""}, {EdgeKind::CdgTrue, 2, 4, ""}});
  CHECK(g.edges_of(EdgeKind::CdgFalse).empty());

  const Cpg flat = build_cpg("def f():\n    x = 1\n    y = x\n");
  CHECK(flat.edges_of(EdgeKind::CdgTrue).empty());
  CHECK(flat.edges_of(EdgeKind::CdgFalse).empty());

  const Cpg nested = build_cpg(
      "def f(a):\n    if a > 1:\n        if a > 2:\n            b()\n        c()\n    else:\n        d()\n");
  CHECK(has_edge(nested, EdgeKind::CdgTrue, "a > 2", "b()"));
  CHECK_FALSE(has_edge(nested, EdgeKind::CdgTrue, "a > 1", "b()"));
  CHECK(has_edge(nested, EdgeKind::CdgTrue, "a > 1", "c()"));
  CHECK(has_edge(nested, EdgeKind::CdgFalse, "a > 1", "d()"));
}

TEST_CASE("data dependence examples") {
  const Cpg g = build_cpg(kBranchProgram);
  CHECK(edge_set(g, EdgeKind::Ddg) == EdgeSet{{EdgeKind::Ddg, 1, 2, "x"}});

  const Cpg simple = build_cpg("def f():\n    x = 1\n    y = x\n");
  CHECK(edge_set(simple, EdgeKind::Ddg) == EdgeSet{{EdgeKind::Ddg, 1, 2, "x"}});

  const Cpg kill = build_cpg("def f():\n    x = 1\n    x = 2\n    y = x\n");
  CHECK(edge_set(kill, EdgeKind::Ddg) == EdgeSet{{EdgeKind::Ddg, 2, 3, "x"}});

  const Cpg loop = build_cpg("def f(n):\n    while n > 0:\n        n = n - 1\n");
  CHECK(has_edge(loop, EdgeKind::Ddg, "n = n - 1", "n > 0", "n"));
  CHECK(has_edge(loop, EdgeKind::Ddg, "n = n - 1", "n = n - 1", "n"));
  CHECK(has_edge(loop, EdgeKind::Ddg, "n", "n > 0", "n"));
}

TEST_CASE("build_cpg examples") {
  const Cpg g = build_cpg(kBranchProgram);
  REQUIRE(g.nodes.size() == 6);
  CHECK(g.nodes[0].kind == NodeKind::Entry);
  CHECK(g.nodes[5].kind == NodeKind::Exit);
  CHECK(g.function_name == "main");

  SUBCASE("empty function body") {
    // The grammar requires a statement, so the closest empty body is a
    // function whose CPG has only ENTRY, EXIT and their CFG edge: a
    // JSON-imported graph. Check the schema accepts it.
    const Cpg empty = cpg_from_json(
        R"({"function":"f","nodes":[{"id":0,"kind":"ENTRY","label":"ENTRY"},{"id":1,"kind":"EXIT","label":"EXIT"}],)"
        R"("edges":[{"src":0,"dst":1,"kind":"CFG","var":null}]})");
    CHECK(empty.nodes.size() == 2);
    CHECK(empty.edges.size() == 1);
  }
  SUBCASE("node cap") {
    std::string src = "def f():\n";
    for (int i = 0; i < 51; ++i) src += "    x = " + std::to_string(i) + "\n";
    try {
      build_cpg(src, 50);
      FAIL("expected GraphTooLarge");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::GraphTooLarge);
    }
    std::string ok = "def f():\n";
    for (int i = 0; i < 50; ++i) ok += "    x = " + std::to_string(i) + "\n";
    CHECK(build_cpg(ok, 50).nodes.size() == 52);
  }
}

TEST_CASE("golden branch graph") {
  const Cpg golden = cpg_from_json(pipeline::read_file(test::data_path("branch_cpg.json")));
  const Cpg built = build_cpg(pipeline::read_file(test::data_path("branch.mini")));
  CHECK(isomorphic(built, golden));
  CHECK(built == golden);
}

TEST_CASE("json round trip and schema errors") {
  const Cpg g = build_cpg(kBranchProgram);
  const std::string text = cpg_to_json(g);
  CHECK(cpg_from_json(text) == g);
  CHECK(cpg_to_json(cpg_from_json(text)) == text);

  auto schema_error = [](const std::string& s) {
    try {
      cpg_from_json(s);
    } catch (const Error& e) {
      return e.kind() == ErrorKind::SchemaError;
    }
    return false;
  };
  const std::string nodes = R"("nodes":[{"id":0,"kind":"ENTRY","label":"ENTRY"},{"id":1,"kind":"EXIT","label":"EXIT"}])";
  CHECK(schema_error(R"({"function":"f",)" + nodes + R"(,"edges":[{"src":0,"dst":7,"kind":"CFG","var":null}]})"));
  CHECK(schema_error(R"({"function":"f",)" + nodes + R"(,"edges":[{"src":0,"dst":1,"kind":"XYZ","var":null}]})"));
  CHECK(schema_error(R"({"function":"f",)" + nodes + R"(,"edges":[{"src":0,"dst":1,"kind":"DDG","var":null}]})"));
  CHECK(schema_error(R"({"function":"f",)" + nodes + R"(,"edges":[{"src":0,"dst":1,"kind":"CFG","var":"x"}]})"));
  CHECK(schema_error("not json"));
  CHECK(schema_error(R"({"nodes":[],"edges":[]})"));
  try {
    cpg_from_json(R"({"function":"f",)" + nodes + R"(,"edges":[{"src":0,"dst":9,"kind":"CFG","var":null}]})");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("$.edges[0]") != std::string::npos);
  }

  // A graph written by some other tool: other key order, extra whitespace,
  // duplicate edge.
  const Cpg external = cpg_from_json(R"({ "edges": [ {"kind":"CFG","var":null,"dst":1,"src":0},
      {"kind":"CFG","var":null,"dst":1,"src":0} ], "nodes": [ {"label":"ENTRY","kind":"ENTRY","id":0},
      {"label":"EXIT","kind":"EXIT","id":1} ], "function": "ext" })");
  CHECK(external.edges.size() == 1);
  CHECK(external.function_name == "ext");
}

TEST_CASE("deterministic ids") {
  const std::string src = "def f(a):\n    if a > 1:\n        b = a\n    else:\n        b = 2\n    c(b)\n";
  CHECK(build_cpg(src) == build_cpg(src));
  CHECK(cpg_to_json(build_cpg(src)) == cpg_to_json(build_cpg(src)));
}

TEST_CASE("property: CFG shape invariants on random programs") {
  Rng rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    ProgramGen gen(rng, {});
    const Generated prog = gen.run();
    CAPTURE(prog.source);
    const Cpg g = build_cpg(prog.source);
    const auto succ = cfg_successors(g);
    std::vector<std::vector<std::size_t>> pred(g.nodes.size());
    for (std::size_t v = 0; v < succ.size(); ++v)
      for (std::size_t w : succ[v]) pred[w].push_back(v);
    const auto from_entry = reachable(succ, g.entry());
    const auto to_exit = reachable(pred, g.exit());
    for (std::size_t v = 0; v < g.nodes.size(); ++v) {
      CHECK(from_entry[v]);
      CHECK(to_exit[v]);
      if (v != g.entry()) CHECK_FALSE(pred[v].empty());
    }
    std::set<std::tuple<EdgeKind, std::size_t, std::size_t, std::optional<std::string>>> unique;
    for (const auto& e : g.edges) {
      CHECK(unique.insert({e.kind, e.src, e.dst, e.var}).second);
      CHECK(e.var.has_value() == (e.kind == EdgeKind::Ddg));
    }
  }
}

TEST_CASE("property: DDG matches path enumeration on acyclic programs") {
  Rng rng(8);
  for (int trial = 0; trial < 300; ++trial) {
    ProgramGen gen(rng, {.loops = false, .max_statements = 10, .max_branches = 3});
    const Generated prog = gen.run();
    CAPTURE(prog.source);
    const Cpg g = build_cpg(prog.source);
    CHECK(edge_set(g, EdgeKind::Ddg) == ddg_by_paths(g));
  }
}

TEST_CASE("property: DDG matches kill-free reachability with loops") {
  Rng rng(9);
  for (int trial = 0; trial < 300; ++trial) {
    ProgramGen gen(rng, {.loops = true, .max_statements = 12, .max_branches = 4});
    const Generated prog = gen.run();
    CAPTURE(prog.source);
    const Cpg g = build_cpg(prog.source);
    CHECK(edge_set(g, EdgeKind::Ddg) == ddg_by_reachability(g));
  }
}

TEST_CASE("property: CDG follows the nesting structure") {
  Rng rng(10);
  for (int trial = 0; trial < 300; ++trial) {
    ProgramGen gen(rng, {});
    const Generated prog = gen.run();
    CAPTURE(prog.source);
    const Cpg g = build_cpg(prog.source);
    // Statement preorder index i is node 1 + params + i.
    const std::size_t base = 1 + prog.params;
    EdgeSet expected;
    for (std::size_t i = 0; i < prog.control.size(); ++i) {
      if (!prog.control[i]) continue;
      const auto [p, on_true] = *prog.control[i];
      expected.insert({on_true ? EdgeKind::CdgTrue : EdgeKind::CdgFalse, base + p, base + i, ""});
    }
    EdgeSet actual = edge_set(g, EdgeKind::CdgTrue);
    for (const auto& e : edge_set(g, EdgeKind::CdgFalse)) actual.insert(e);
    CHECK(actual == expected);
    CHECK(g.nodes.size() == base + prog.control.size() + 1);
  }
}

TEST_CASE("property: json round trip on random programs") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    ProgramGen gen(rng, {});
    const Cpg g = build_cpg(gen.run().source);
    const std::string text = cpg_to_json(g);
    CHECK(cpg_from_json(text) == g);
    CHECK(cpg_to_json(cpg_from_json(text)) == text);
  }
}
