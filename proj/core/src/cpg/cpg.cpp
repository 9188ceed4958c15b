// SPDX-License-Identifier: Apache-2.0
#include "ttune/cpg/cpg.hpp"

#include <algorithm>
#include <map>
#include <utility>

#include "ttune/error.hpp"

namespace ttune::cpg {

std::string_view node_kind_name(NodeKind kind) noexcept {
  switch (kind) {
    case NodeKind::Entry: return "ENTRY";
    case NodeKind::Exit: return "EXIT";
    case NodeKind::Decl: return "DECL";
    case NodeKind::Pred: return "PRED";
    case NodeKind::Call: return "CALL";
    case NodeKind::Return: return "RETURN";
    case NodeKind::Param: return "PARAM";
  }
  return "?";
}

std::string_view edge_kind_name(EdgeKind kind) noexcept {
  switch (kind) {
    case EdgeKind::Ast: return "AST";
    case EdgeKind::Cfg: return "CFG";
    case EdgeKind::CdgTrue: return "CDG_TRUE";
    case EdgeKind::CdgFalse: return "CDG_FALSE";
    case EdgeKind::Ddg: return "DDG";
  }
  return "?";
}

std::optional<NodeKind> parse_node_kind(std::string_view name) noexcept {
  for (auto k : {NodeKind::Entry, NodeKind::Exit, NodeKind::Decl, NodeKind::Pred, NodeKind::Call, NodeKind::Return,
                 NodeKind::Param})
    if (node_kind_name(k) == name) return k;
  return std::nullopt;
}

std::optional<EdgeKind> parse_edge_kind(std::string_view name) noexcept {
  for (auto k : {EdgeKind::Ast, EdgeKind::Cfg, EdgeKind::CdgTrue, EdgeKind::CdgFalse, EdgeKind::Ddg})
    if (edge_kind_name(k) == name) return k;
  return std::nullopt;
}

std::vector<CpgEdge> Cpg::edges_of(EdgeKind kind) const {
  std::vector<CpgEdge> out;
  for (const auto& e : edges)
    if (e.kind == kind) out.push_back(e);
  return out;
}

std::vector<std::vector<std::size_t>> ControlFlowGraph::successors() const {
  std::vector<std::vector<std::size_t>> succ(nodes.size());
  for (const auto& e : cfg_edges) succ[e.src].push_back(e.dst);
  return succ;
}

namespace {

void collect_uses(const AstNode& expr, std::set<std::string>& out) {
  if (expr.kind == AstKind::Name) out.insert(expr.name);
  for (const auto& child : expr.children) collect_uses(child, out);
}

class CfgBuilder {
 public:
  ControlFlowGraph run(const AstNode& fn) {
    if (fn.kind != AstKind::FuncDef) fail(ErrorKind::InvalidConfig, "build_cfg expects a FuncDef");
    g_.function_name = fn.name;
    const std::size_t entry = add_node(NodeKind::Entry, "ENTRY", std::nullopt, std::nullopt);
    std::vector<std::size_t> frontier{entry};
    const AstNode* body = nullptr;
    for (const auto& child : fn.children) {
      if (child.kind == AstKind::Param) {
        const std::size_t id = add_node(NodeKind::Param, child.name, entry, std::nullopt);
        g_.defs[id].insert(child.name);
        link(frontier, id);
        frontier = {id};
      } else if (child.kind == AstKind::Block) {
        body = &child;
      }
    }
    if (body != nullptr) frontier = lower_block(*body, frontier, entry, std::nullopt);
    const std::size_t exit = add_node(NodeKind::Exit, "EXIT", std::nullopt, std::nullopt);
    for (std::size_t r : returns_) g_.cfg_edges.push_back({r, exit, EdgeKind::Cfg, std::nullopt});
    link(frontier, exit);
    return std::move(g_);
  }

 private:
  std::size_t add_node(NodeKind kind, std::string label, std::optional<std::size_t> ast_parent,
                       std::optional<ControlFlowGraph::ControlParent> control) {
    const std::size_t id = g_.nodes.size();
    g_.nodes.push_back({id, kind, std::move(label)});
    g_.defs.emplace_back();
    g_.uses.emplace_back();
    g_.ast_parent.push_back(ast_parent);
    g_.control_parent.push_back(control);
    return id;
  }

  void link(const std::vector<std::size_t>& from, std::size_t to) {
    for (std::size_t f : from) g_.cfg_edges.push_back({f, to, EdgeKind::Cfg, std::nullopt});
  }

  std::vector<std::size_t> lower_block(const AstNode& block, std::vector<std::size_t> frontier, std::size_t parent,
                                       std::optional<ControlFlowGraph::ControlParent> control) {
    for (const auto& stmt : block.children) {
      if (frontier.empty()) throw SyntaxError(stmt.line, "unreachable statement after return");
      frontier = lower_statement(stmt, frontier, parent, control);
    }
    return frontier;
  }

  std::vector<std::size_t> lower_statement(const AstNode& stmt, const std::vector<std::size_t>& frontier,
                                           std::size_t parent,
                                           std::optional<ControlFlowGraph::ControlParent> control) {
    switch (stmt.kind) {
      case AstKind::Assign: {
        const std::size_t id = add_node(NodeKind::Decl, stmt.text, parent, control);
        g_.defs[id].insert(stmt.name);
        collect_uses(stmt.children.at(0), g_.uses[id]);
        link(frontier, id);
        return {id};
      }
      case AstKind::Call: {
        const std::size_t id = add_node(NodeKind::Call, stmt.text, parent, control);
        collect_uses(stmt, g_.uses[id]);
        link(frontier, id);
        return {id};
      }
      case AstKind::Return: {
        const std::size_t id = add_node(NodeKind::Return, stmt.text, parent, control);
        for (const auto& child : stmt.children) collect_uses(child, g_.uses[id]);
        link(frontier, id);
        returns_.push_back(id);
        return {};
      }
      case AstKind::If: {
        const std::size_t pred = add_node(NodeKind::Pred, stmt.children.at(0).text, parent, control);
        collect_uses(stmt.children[0], g_.uses[pred]);
        link(frontier, pred);
        auto out = lower_block(stmt.children.at(1), {pred}, pred, ControlFlowGraph::ControlParent{pred, true});
        if (stmt.children.size() > 2) {
          auto other = lower_block(stmt.children[2], {pred}, pred, ControlFlowGraph::ControlParent{pred, false});
          out.insert(out.end(), other.begin(), other.end());
        } else {
          out.push_back(pred);
        }
        return out;
      }
      case AstKind::While: {
        const std::size_t pred = add_node(NodeKind::Pred, stmt.children.at(0).text, parent, control);
        collect_uses(stmt.children[0], g_.uses[pred]);
        link(frontier, pred);
        auto body_out = lower_block(stmt.children.at(1), {pred}, pred, ControlFlowGraph::ControlParent{pred, true});
        link(body_out, pred);
        return {pred};
      }
      default:
        throw SyntaxError(stmt.line, "unsupported statement kind " + std::string(ast_kind_name(stmt.kind)));
    }
  }

  ControlFlowGraph g_;
  std::vector<std::size_t> returns_;
};

void sort_unique(std::vector<CpgEdge>& edges) {
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

}  // namespace

ControlFlowGraph build_cfg(const AstNode& funcdef) { return CfgBuilder().run(funcdef); }

std::vector<CpgEdge> control_dependence(const ControlFlowGraph& cfg) {
  std::vector<CpgEdge> out;
  for (std::size_t i = 0; i < cfg.nodes.size(); ++i) {
    const auto& cp = cfg.control_parent[i];
    if (!cp) continue;
    out.push_back({cp->predicate, i, cp->on_true_branch ? EdgeKind::CdgTrue : EdgeKind::CdgFalse, std::nullopt});
  }
  sort_unique(out);
  return out;
}

std::vector<CpgEdge> data_dependence(const ControlFlowGraph& cfg) {
  using Def = std::pair<std::string, std::size_t>;
  const std::size_t n = cfg.nodes.size();
  std::vector<std::vector<std::size_t>> preds(n);
  for (const auto& e : cfg.cfg_edges) preds[e.dst].push_back(e.src);

  std::vector<std::set<Def>> in(n), out(n);
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      std::set<Def> reach;
      for (std::size_t p : preds[i]) reach.insert(out[p].begin(), out[p].end());
      std::set<Def> next;
      for (const auto& d : reach)
        if (cfg.defs[i].count(d.first) == 0) next.insert(d);
      for (const auto& v : cfg.defs[i]) next.insert({v, i});
      if (next != out[i]) {
        out[i] = std::move(next);
        changed = true;
      }
      in[i] = std::move(reach);
    }
  }

  std::vector<CpgEdge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& [var, def] : in[i]) {
      if (cfg.uses[i].count(var) != 0) edges.push_back({def, i, EdgeKind::Ddg, var});
    }
  }
  sort_unique(edges);
  return edges;
}

std::vector<CpgEdge> ast_edges(const ControlFlowGraph& cfg) {
  std::vector<CpgEdge> out;
  for (std::size_t i = 0; i < cfg.nodes.size(); ++i)
    if (cfg.ast_parent[i]) out.push_back({*cfg.ast_parent[i], i, EdgeKind::Ast, std::nullopt});
  sort_unique(out);
  return out;
}

Cpg build_cpg(const AstNode& funcdef, std::size_t max_nodes) {
  ControlFlowGraph cfg = build_cfg(funcdef);
  const std::size_t statements = cfg.nodes.size() - 2;
  if (statements > max_nodes) {
    fail(ErrorKind::GraphTooLarge, "function '" + cfg.function_name + "' has " + std::to_string(statements) +
                                       " statement nodes, cap is " + std::to_string(max_nodes));
  }
  Cpg cpg;
  cpg.function_name = cfg.function_name;
  cpg.nodes = cfg.nodes;
  for (auto family : {ast_edges(cfg), cfg.cfg_edges, control_dependence(cfg), data_dependence(cfg)})
    cpg.edges.insert(cpg.edges.end(), family.begin(), family.end());
  sort_unique(cpg.edges);
  return cpg;
}

Cpg build_cpg(std::string_view source, std::size_t max_nodes) {
  Program prog = parse(source);
  return build_cpg(prog.functions.front(), max_nodes);
}

std::vector<Cpg> build_cpgs(std::string_view source, std::size_t max_nodes) {
  Program prog = parse(source);
  std::vector<Cpg> out;
  for (const auto& fn : prog.functions) out.push_back(build_cpg(fn, max_nodes));
  return out;
}

}  // namespace ttune::cpg
