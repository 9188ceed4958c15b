// SPDX-License-Identifier: Apache-2.0
#include "ttune/vectorizer/vectorizer.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <json.hpp>

#include "ttune/error.hpp"
#include "ttune/text/tokenize.hpp"

namespace ttune::vec {

std::string_view mode_name(VectorizerMode mode) noexcept {
  switch (mode) {
    case VectorizerMode::Binary: return "binary";
    case VectorizerMode::Tfidf: return "tfidf";
    case VectorizerMode::External: return "external";
  }
  return "?";
}

VectorizerMode parse_mode(std::string_view name) {
  for (auto m : {VectorizerMode::Binary, VectorizerMode::Tfidf, VectorizerMode::External})
    if (mode_name(m) == name) return m;
  fail(ErrorKind::InvalidConfig, "unknown vectorizer mode '" + std::string(name) + "'");
}

std::size_t bucket_of(std::string_view token, std::size_t d_init) {
  return static_cast<std::size_t>(fnv1a64(token) % static_cast<std::uint64_t>(d_init));
}

VectorizerModel fit(const std::vector<std::string>& labels, VectorizerMode mode, std::size_t d_init) {
  if (d_init == 0) fail(ErrorKind::InvalidConfig, "d_init must be positive");
  VectorizerModel model;
  model.mode = mode;
  model.d_init = d_init;
  if (mode != VectorizerMode::Tfidf) return model;
  if (labels.empty()) fail(ErrorKind::EmptyCorpus, "tfidf needs at least one label");
  std::map<std::string, std::size_t> df;
  for (const auto& label : labels) {
    auto tokens = split_tokens(label);
    std::set<std::string> unique(tokens.begin(), tokens.end());
    for (const auto& t : unique) ++df[t];
  }
  const double docs = static_cast<double>(labels.size());
  for (const auto& [token, count] : df) {
    model.idf[token] = std::log((1.0 + docs) / (1.0 + static_cast<double>(count))) + 1.0;
  }
  model.unseen_idf = std::log(1.0 + docs) + 1.0;
  return model;
}

VectorizerModel external_model(std::map<std::string, std::vector<double>> table, std::size_t dim) {
  for (const auto& [label, v] : table) {
    if (v.size() != dim) {
      fail(ErrorKind::SchemaError, "external vector for '" + label + "' has length " + std::to_string(v.size()) +
                                       ", expected " + std::to_string(dim));
    }
  }
  VectorizerModel model;
  model.mode = VectorizerMode::External;
  model.d_init = dim;
  model.external_table = std::move(table);
  return model;
}

VectorizerModel load_external_table(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::SchemaError, std::string("$: invalid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("dim") || !doc["dim"].is_number_integer() || doc["dim"].get<long long>() <= 0) {
    fail(ErrorKind::SchemaError, "$.dim: expected a positive integer");
  }
  if (!doc.contains("vectors") || !doc["vectors"].is_object()) fail(ErrorKind::SchemaError, "$.vectors: expected an object");
  std::map<std::string, std::vector<double>> table;
  for (const auto& [label, arr] : doc["vectors"].items()) {
    if (!arr.is_array()) fail(ErrorKind::SchemaError, "$.vectors." + label + ": expected an array");
    std::vector<double> v;
    for (const auto& x : arr) {
      if (!x.is_number()) fail(ErrorKind::SchemaError, "$.vectors." + label + ": expected numbers");
      v.push_back(x.get<double>());
    }
    table.emplace(label, std::move(v));
  }
  return external_model(std::move(table), doc["dim"].get<std::size_t>());
}

std::vector<double> vectorize_label(const VectorizerModel& model, std::string_view label) {
  if (model.mode == VectorizerMode::External) {
    auto it = model.external_table.find(std::string(label));
    if (it == model.external_table.end()) fail(ErrorKind::UnknownLabel, "no external vector for '" + std::string(label) + "'");
    return it->second;
  }
  std::vector<double> out(model.d_init, 0.0);
  const auto tokens = split_tokens(label);
  if (model.mode == VectorizerMode::Binary) {
    for (const auto& t : tokens) out[bucket_of(t, model.d_init)] = 1.0;
    return out;
  }
  std::map<std::string, double> tf;
  for (const auto& t : tokens) tf[t] += 1.0;
  for (const auto& [token, count] : tf) {
    auto it = model.idf.find(token);
    const double idf = it == model.idf.end() ? model.unseen_idf : it->second;
    out[bucket_of(token, model.d_init)] += count * idf;
  }
  double norm = 0.0;
  for (double v : out) norm += v * v;
  norm = std::sqrt(norm);
  if (norm > 0.0)
    for (double& v : out) v /= norm;
  return out;
}

std::vector<std::string> node_labels(const cpg::Cpg& graph) {
  std::vector<std::string> out;
  out.reserve(graph.nodes.size());
  for (const auto& n : graph.nodes) out.push_back(n.label);
  return out;
}

GraphTensors vectorize_graph(const VectorizerModel& model, const cpg::Cpg& graph) {
  GraphTensors gt;
  gt.node_count = graph.nodes.size();
  std::vector<double> values;
  values.reserve(gt.node_count * model.d_init);
  for (const auto& node : graph.nodes) {
    auto v = vectorize_label(model, node.label);
    values.insert(values.end(), v.begin(), v.end());
  }
  gt.h_init = Matrix(gt.node_count, model.d_init, std::move(values));
  std::vector<std::set<std::size_t>> nbrs(gt.node_count);
  for (std::size_t i = 0; i < gt.node_count; ++i) nbrs[i].insert(i);
  for (const auto& e : graph.edges) {
    nbrs[e.src].insert(e.dst);
    nbrs[e.dst].insert(e.src);
  }
  gt.adjacency.reserve(gt.node_count);
  for (auto& s : nbrs) gt.adjacency.emplace_back(s.begin(), s.end());
  return gt;
}

std::string graph_tensors_to_json(const GraphTensors& tensors) {
  nlohmann::json doc;
  doc["node_count"] = tensors.node_count;
  doc["d_init"] = tensors.h_init.cols();
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < tensors.h_init.rows(); ++i) {
    auto r = tensors.h_init.row(i);
    rows.push_back(std::vector<double>(r.begin(), r.end()));
  }
  doc["h_init"] = std::move(rows);
  doc["adjacency"] = tensors.adjacency;
  return doc.dump() + "\n";
}

}  // namespace ttune::vec
