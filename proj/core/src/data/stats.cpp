// SPDX-License-Identifier: Apache-2.0
#include "ttune/data/stats.hpp"

#include <algorithm>
#include <cstdio>

#include <json.hpp>

#include "ttune/cpg/cpg.hpp"
#include "ttune/error.hpp"
#include "ttune/text/tokenize.hpp"

namespace ttune::data {

DatasetStats dataset_stats(const std::vector<pipeline::Sample>& dataset, std::size_t max_graph_nodes) {
  DatasetStats st;
  st.total = dataset.size();
  std::size_t nodes = 0, edges = 0, inputs = 0, targets = 0, graphs = 0;
  for (const auto& s : dataset) {
    const std::size_t in = split_tokens(s.code).size();
    const std::size_t out = split_tokens(s.target).size();
    inputs += in;
    targets += out;
    st.max_input_tokens = std::max(st.max_input_tokens, in);
    st.max_target_tokens = std::max(st.max_target_tokens, out);
    try {
      const cpg::Cpg g = cpg::build_cpg(s.code, max_graph_nodes);
      nodes += g.nodes.size();
      edges += g.edges.size();
      st.max_nodes = std::max(st.max_nodes, g.nodes.size());
      st.max_edges = std::max(st.max_edges, g.edges.size());
      ++graphs;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::SyntaxError && e.kind() != ErrorKind::GraphTooLarge) throw;
      ++st.unparsable;
    }
  }
  auto avg = [](std::size_t sum, std::size_t n) { return n == 0 ? 0.0 : static_cast<double>(sum) / static_cast<double>(n); };
  st.avg_nodes = avg(nodes, graphs);
  st.avg_edges = avg(edges, graphs);
  st.avg_input_tokens = avg(inputs, st.total);
  st.avg_target_tokens = avg(targets, st.total);
  return st;
}

std::string stats_to_json(const DatasetStats& s) {
  nlohmann::json j = {{"total", s.total},
                      {"avg_nodes", s.avg_nodes},
                      {"avg_edges", s.avg_edges},
                      {"avg_input_tokens", s.avg_input_tokens},
                      {"avg_target_tokens", s.avg_target_tokens},
                      {"max_nodes", s.max_nodes},
                      {"max_edges", s.max_edges},
                      {"max_input_tokens", s.max_input_tokens},
                      {"max_target_tokens", s.max_target_tokens},
                      {"unparsable", s.unparsable}};
  return j.dump(2) + "\n";
}

std::string stats_to_text(const DatasetStats& s) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "Total                %zu\n"
                "Average #Node        %.3f\n"
                "Average #Edge        %.3f\n"
                "Average #Token Input %.3f\n"
                "Average #Token Truth %.3f\n"
                "Max #Node            %zu\n"
                "Max #Edge            %zu\n"
                "Max #Token Input     %zu\n"
                "Max #Token Truth     %zu\n",
                s.total, s.avg_nodes, s.avg_edges, s.avg_input_tokens, s.avg_target_tokens, s.max_nodes, s.max_edges,
                s.max_input_tokens, s.max_target_tokens);
  std::string out = buf;
  if (s.unparsable > 0) out += "Unparsable           " + std::to_string(s.unparsable) + "\n";
  return out;
}

}  // namespace ttune::data
