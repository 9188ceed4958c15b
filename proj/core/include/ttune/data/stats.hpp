// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ttune/pipeline/dataset.hpp"

namespace ttune::data {

/// Node counts include ENTRY and EXIT. Samples whose code does not yield a
/// graph still count towards the token metrics and `total`, but not the
/// graph metrics; they are tallied in `unparsable`.
struct DatasetStats {
  std::size_t total = 0;
  double avg_nodes = 0.0;
  double avg_edges = 0.0;
  double avg_input_tokens = 0.0;
  double avg_target_tokens = 0.0;
  std::size_t max_nodes = 0;
  std::size_t max_edges = 0;
  std::size_t max_input_tokens = 0;
  std::size_t max_target_tokens = 0;
  std::size_t unparsable = 0;
};

DatasetStats dataset_stats(const std::vector<pipeline::Sample>& dataset, std::size_t max_graph_nodes = 50);

std::string stats_to_json(const DatasetStats& stats);
std::string stats_to_text(const DatasetStats& stats);

}  // namespace ttune::data
