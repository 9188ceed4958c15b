// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <set>

#include <json.hpp>

#include "ttune/cpg/cpg.hpp"
#include "ttune/error.hpp"

namespace ttune::cpg {

using nlohmann::json;

std::string cpg_to_json(const Cpg& cpg) {
  json doc;
  doc["function"] = cpg.function_name;
  json nodes = json::array();
  for (const auto& n : cpg.nodes) {
    nodes.push_back({{"id", n.id}, {"kind", node_kind_name(n.kind)}, {"label", n.label}});
  }
  json edges = json::array();
  for (const auto& e : cpg.edges) {
    json var = e.var ? json(*e.var) : json(nullptr);
    edges.push_back({{"src", e.src}, {"dst", e.dst}, {"kind", edge_kind_name(e.kind)}, {"var", var}});
  }
  doc["nodes"] = std::move(nodes);
  doc["edges"] = std::move(edges);
  return doc.dump(2) + "\n";
}

namespace {

[[noreturn]] void schema(const std::string& path, const std::string& what) {
  fail(ErrorKind::SchemaError, path + ": " + what);
}

const json& field(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) schema(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) schema(path + "." + key, "missing");
  return *it;
}

std::size_t index_field(const json& obj, const char* key, const std::string& path) {
  const json& v = field(obj, key, path);
  if (!v.is_number_integer() || v.get<long long>() < 0) schema(path + "." + key, "expected a non-negative integer");
  return v.get<std::size_t>();
}

std::string string_field(const json& obj, const char* key, const std::string& path) {
  const json& v = field(obj, key, path);
  if (!v.is_string()) schema(path + "." + key, "expected a string");
  return v.get<std::string>();
}

}  // namespace

Cpg cpg_from_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    schema("$", std::string("invalid JSON: ") + e.what());
  }
  Cpg cpg;
  cpg.function_name = string_field(doc, "function", "$");

  const json& nodes = field(doc, "nodes", "$");
  if (!nodes.is_array()) schema("$.nodes", "expected an array");
  std::vector<std::optional<CpgNode>> by_id(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const std::string path = "$.nodes[" + std::to_string(i) + "]";
    CpgNode node;
    node.id = index_field(nodes[i], "id", path);
    const auto kind = parse_node_kind(string_field(nodes[i], "kind", path));
    if (!kind) schema(path + ".kind", "unknown node kind");
    node.kind = *kind;
    node.label = string_field(nodes[i], "label", path);
    if (node.id >= nodes.size()) schema(path + ".id", "ids must be dense 0..n-1");
    if (by_id[node.id]) schema(path + ".id", "duplicate id");
    by_id[node.id] = std::move(node);
  }
  for (auto& n : by_id) cpg.nodes.push_back(std::move(*n));
  auto count_kind = [&](NodeKind k) {
    return std::count_if(cpg.nodes.begin(), cpg.nodes.end(), [k](const CpgNode& n) { return n.kind == k; });
  };
  if (count_kind(NodeKind::Entry) != 1) schema("$.nodes", "exactly one ENTRY node required");
  if (count_kind(NodeKind::Exit) != 1) schema("$.nodes", "exactly one EXIT node required");
  if (cpg.nodes.front().kind != NodeKind::Entry || cpg.nodes.back().kind != NodeKind::Exit) {
    schema("$.nodes", "ENTRY must have the lowest id and EXIT the highest");
  }

  const json& edges = field(doc, "edges", "$");
  if (!edges.is_array()) schema("$.edges", "expected an array");
  std::set<CpgEdge> seen;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::string path = "$.edges[" + std::to_string(i) + "]";
    CpgEdge edge;
    edge.src = index_field(edges[i], "src", path);
    edge.dst = index_field(edges[i], "dst", path);
    if (edge.src >= cpg.nodes.size()) schema(path + ".src", "unknown node id " + std::to_string(edge.src));
    if (edge.dst >= cpg.nodes.size()) schema(path + ".dst", "unknown node id " + std::to_string(edge.dst));
    const auto kind = parse_edge_kind(string_field(edges[i], "kind", path));
    if (!kind) schema(path + ".kind", "unknown edge kind");
    edge.kind = *kind;
    const json& var = field(edges[i], "var", path);
    if (edge.kind == EdgeKind::Ddg) {
      if (!var.is_string()) schema(path + ".var", "DDG edges need a variable name");
      edge.var = var.get<std::string>();
    } else if (!var.is_null()) {
      schema(path + ".var", "only DDG edges carry a variable");
    }
    seen.insert(std::move(edge));
  }
  cpg.edges.assign(seen.begin(), seen.end());
  return cpg;
}

}  // namespace ttune::cpg
