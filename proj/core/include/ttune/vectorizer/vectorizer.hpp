// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ttune/cpg/cpg.hpp"
#include "ttune/numerics/matrix.hpp"

namespace ttune::vec {

enum class VectorizerMode { Binary, Tfidf, External };

std::string_view mode_name(VectorizerMode mode) noexcept;
VectorizerMode parse_mode(std::string_view name);

inline constexpr std::size_t kDefaultInitDim = 1024;

/// Maps node labels to fixed-width vectors. Tokens (see split_tokens) land
/// in bucket fnv1a64(token) % d_init.
struct VectorizerModel {
  VectorizerMode mode = VectorizerMode::Binary;
  std::size_t d_init = kDefaultInitDim;
  /// tfidf only: token -> ln((1 + D) / (1 + df)) + 1.
  std::map<std::string, double> idf;
  /// Weight for tokens never seen during fit, ln(1 + D) + 1.
  double unseen_idf = 1.0;
  /// external only.
  std::map<std::string, std::vector<double>> external_table;
};

std::size_t bucket_of(std::string_view token, std::size_t d_init);

/// Binary mode ignores the corpus. Tfidf treats every label as a document
/// and rejects an empty corpus.
VectorizerModel fit(const std::vector<std::string>& labels, VectorizerMode mode = VectorizerMode::Binary,
                    std::size_t d_init = kDefaultInitDim);

VectorizerModel external_model(std::map<std::string, std::vector<double>> table, std::size_t dim);
/// Parses {"dim": int, "vectors": {label: [floats]}}.
VectorizerModel load_external_table(std::string_view json_text);

std::vector<double> vectorize_label(const VectorizerModel& model, std::string_view label);

/// Node features plus the undirected message-passing neighbourhoods: every
/// edge kind merged, self-loops added, neighbour lists sorted and unique.
struct GraphTensors {
  Matrix h_init;
  std::vector<std::vector<std::size_t>> adjacency;
  std::size_t node_count = 0;
};

GraphTensors vectorize_graph(const VectorizerModel& model, const cpg::Cpg& graph);

std::vector<std::string> node_labels(const cpg::Cpg& graph);

std::string graph_tensors_to_json(const GraphTensors& tensors);

}  // namespace ttune::vec
