// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ttune/numerics/param_store.hpp"
#include "ttune/numerics/tape.hpp"
#include "ttune/vectorizer/vectorizer.hpp"

namespace ttune::transducer {

enum class Fusion { Abfl, Sum };
enum class SoftmaxAxis { Tokens, Keys };
/// Where the fusion layer's graph vector comes from: the graph engine, or a
/// free trainable vector (the graph-less ablation).
enum class GraphInput { Gve, FreeVector };

struct TransducerConfig {
  std::size_t d_init = 1024;
  std::size_t d_down = 8;
  std::size_t d_up = 128;
  std::size_t d_abf = 8;
  std::size_t d_backbone = 64;
  double leaky_slope = 0.2;
  Fusion fusion = Fusion::Abfl;
  SoftmaxAxis softmax_axis = SoftmaxAxis::Tokens;
  GraphInput graph_input = GraphInput::Gve;
  bool residual = true;
  double rms_eps = 1e-8;

  /// Throws InvalidConfig on zero dims or sum fusion with d_up != d_backbone.
  void validate() const;
};

inline constexpr std::string_view kPrefix = "transducer.";

/// Names of every trainable tensor the config owns, in store order.
std::vector<std::string> param_names(const TransducerConfig& config);

/// Adds the transducer tensors to `store` as trainable. Gains start at 1,
/// the up-projection and final projection at 0 (so the untrained transducer
/// is the identity), everything else Glorot-uniform from `seed`.
void init_params(ParamStore& store, const TransducerConfig& config, std::uint64_t seed);
ParamStore init_params(const TransducerConfig& config, std::uint64_t seed);

/// Exact number of trainable scalars for the config's shape table.
std::size_t count_trainable(const TransducerConfig& config);

/// Transducer tensors bound to one tape.
struct Bound {
  Var g_gve, w_down, gat_w_l, gat_w_r, gat_a, gat_b, gat_b_out, w_up;
  Var g_free;
  Var g_c, g_g, w_q, w_k, w_v, w_final;
};

Bound bind(Tape& tape, ParamStore& store, const TransducerConfig& config);

/// Single-head GATv2 layer over neighbourhoods that include self-loops:
///   e_ij = a . leaky_relu(W_l h_i + W_r h_j + b),  alpha_i = softmax_j(e_i),
///   h'_i = sum_j alpha_ij W_r h_j + b_out.
/// When `attention` is given it receives alpha_i. per node, aligned with
/// adjacency[i].
Var gatv2_forward(Var h, const std::vector<std::vector<std::size_t>>& adjacency, const Bound& params,
                  double leaky_slope, std::vector<std::vector<double>>* attention = nullptr);

/// Graph feature vector G (1 x d_up): RMS norm per node, down projection,
/// GATv2, up projection, mean pooling.
Var gve_forward(Tape& tape, const vec::GraphTensors& graph, const Bound& params, const TransducerConfig& config);

/// Attention fusion of G into the token embeddings (L x d_backbone).
Var abfl_forward(Var c_init, Var graph_vector, const Bound& params, const TransducerConfig& config);

/// Whole transducer on precomputed graph tensors. `graph` may be null only
/// for GraphInput::FreeVector.
Var fuse(Tape& tape, Var c_init, const vec::GraphTensors* graph, const Bound& params, const TransducerConfig& config);

/// Parses `code`, builds its CPG, vectorizes it and fuses. Parse and size
/// errors propagate before anything is recorded.
Var transduce(Tape& tape, std::string_view code, Var c_init, const Bound& params, const TransducerConfig& config,
              const vec::VectorizerModel& vectorizer, std::size_t max_nodes = 50);

}  // namespace ttune::transducer
