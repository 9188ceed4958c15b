// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "ttune/cpg/ast.hpp"

namespace ttune::cpg {

enum class NodeKind { Entry, Exit, Decl, Pred, Call, Return, Param };
enum class EdgeKind { Ast, Cfg, CdgTrue, CdgFalse, Ddg };

std::string_view node_kind_name(NodeKind kind) noexcept;
std::string_view edge_kind_name(EdgeKind kind) noexcept;
std::optional<NodeKind> parse_node_kind(std::string_view name) noexcept;
std::optional<EdgeKind> parse_edge_kind(std::string_view name) noexcept;

struct CpgNode {
  std::size_t id = 0;
  NodeKind kind = NodeKind::Decl;
  std::string label;

  friend bool operator==(const CpgNode&, const CpgNode&) = default;
};

struct CpgEdge {
  std::size_t src = 0;
  std::size_t dst = 0;
  EdgeKind kind = EdgeKind::Cfg;
  std::optional<std::string> var;  // DDG only

  friend bool operator==(const CpgEdge&, const CpgEdge&) = default;
  friend bool operator<(const CpgEdge& a, const CpgEdge& b) {
    return std::tie(a.kind, a.src, a.dst, a.var) < std::tie(b.kind, b.src, b.dst, b.var);
  }
};

/// Statement-level code property graph of one function. Node ids are dense
/// and assigned ENTRY = 0, parameters, statements in source preorder, EXIT
/// last. Edges are unique and sorted by (kind, src, dst, var).
struct Cpg {
  std::string function_name;
  std::vector<CpgNode> nodes;
  std::vector<CpgEdge> edges;

  std::size_t entry() const { return 0; }
  std::size_t exit() const { return nodes.size() - 1; }
  std::vector<CpgEdge> edges_of(EdgeKind kind) const;

  friend bool operator==(const Cpg&, const Cpg&) = default;
};

/// Statement nodes plus the per-node facts the dependence analyses need.
/// cfg_edges keep construction order: a predicate's true successor edge is
/// emitted before its false successor edge.
struct ControlFlowGraph {
  std::string function_name;
  std::vector<CpgNode> nodes;
  std::vector<CpgEdge> cfg_edges;
  std::vector<std::set<std::string>> defs;
  std::vector<std::set<std::string>> uses;
  /// Syntactic parent statement (ENTRY for top-level statements).
  std::vector<std::optional<std::size_t>> ast_parent;
  /// Innermost enclosing predicate and the branch taken to reach the node.
  struct ControlParent {
    std::size_t predicate;
    bool on_true_branch;
  };
  std::vector<std::optional<ControlParent>> control_parent;

  std::vector<std::vector<std::size_t>> successors() const;
};

inline constexpr std::size_t kDefaultMaxNodes = 50;

/// Lowers a FuncDef into statement nodes and structured control flow.
/// Statements that follow a return on every path are rejected as
/// SyntaxError because they would leave CFG nodes without predecessors.
ControlFlowGraph build_cfg(const AstNode& funcdef);

/// Direct-parent rule: each statement depends on its innermost enclosing
/// predicate, CDG_TRUE for then-branches and loop bodies, CDG_FALSE for
/// else-branches.
std::vector<CpgEdge> control_dependence(const ControlFlowGraph& cfg);

/// Reaching-definitions fixpoint; one def -> use edge per variable per
/// reaching definition.
std::vector<CpgEdge> data_dependence(const ControlFlowGraph& cfg);

std::vector<CpgEdge> ast_edges(const ControlFlowGraph& cfg);

/// Union of AST, CFG, CDG and DDG edges over the statement nodes of the
/// first function in `source`. Throws GraphTooLarge when the number of
/// non-ENTRY/EXIT nodes exceeds max_nodes.
Cpg build_cpg(std::string_view source, std::size_t max_nodes = kDefaultMaxNodes);
Cpg build_cpg(const AstNode& funcdef, std::size_t max_nodes = kDefaultMaxNodes);
std::vector<Cpg> build_cpgs(std::string_view source, std::size_t max_nodes = kDefaultMaxNodes);

std::string cpg_to_json(const Cpg& cpg);
/// Validates against the interchange schema; SchemaError messages carry the
/// JSON path of the first violation. Exact duplicate edges are merged.
Cpg cpg_from_json(std::string_view text);

}  // namespace ttune::cpg
