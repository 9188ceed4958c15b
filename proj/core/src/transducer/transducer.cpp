// SPDX-License-Identifier: Apache-2.0
#include "ttune/transducer/transducer.hpp"

#include <algorithm>
#include <cmath>

#include "ttune/cpg/cpg.hpp"
#include "ttune/error.hpp"
#include "ttune/numerics/ops.hpp"
#include "ttune/numerics/random.hpp"

namespace ttune::transducer {
namespace {

std::string name(std::string_view suffix) { return std::string(kPrefix) + std::string(suffix); }

struct Shape {
  std::string name;
  std::size_t rows;
  std::size_t cols;
};

std::vector<Shape> shape_table(const TransducerConfig& c) {
  std::vector<Shape> shapes;
  if (c.graph_input == GraphInput::Gve) {
    shapes.push_back({name("g_gve"), 1, c.d_init});
    shapes.push_back({name("w_down"), c.d_init, c.d_down});
    shapes.push_back({name("gat.w_l"), c.d_down, c.d_down});
    shapes.push_back({name("gat.w_r"), c.d_down, c.d_down});
    shapes.push_back({name("gat.a"), 1, c.d_down});
    shapes.push_back({name("gat.b"), 1, c.d_down});
    shapes.push_back({name("gat.b_out"), 1, c.d_down});
    shapes.push_back({name("w_up"), c.d_down, c.d_up});
  } else {
    shapes.push_back({name("g_free"), 1, c.d_up});
  }
  if (c.fusion == Fusion::Abfl) {
    shapes.push_back({name("g_c"), 1, c.d_backbone});
    shapes.push_back({name("g_g"), 1, c.d_up});
    shapes.push_back({name("w_q"), c.d_backbone, c.d_abf});
    shapes.push_back({name("w_k"), c.d_up, c.d_abf});
    shapes.push_back({name("w_v"), c.d_backbone, c.d_abf});
    shapes.push_back({name("w_final"), c.d_abf, c.d_backbone});
  }
  return shapes;
}

bool is_gain(std::string_view n) { return n.ends_with("g_gve") || n.ends_with("g_c") || n.ends_with("g_g"); }
bool is_zero_init(std::string_view n) { return n.ends_with("w_up") || n.ends_with("w_final"); }

}  // namespace

void TransducerConfig::validate() const {
  for (std::size_t d : {d_init, d_down, d_up, d_abf, d_backbone})
    if (d == 0) fail(ErrorKind::InvalidConfig, "transducer dimensions must be >= 1");
  if (fusion == Fusion::Sum && d_up != d_backbone) {
    fail(ErrorKind::InvalidConfig, "sum fusion needs d_up == d_backbone (" + std::to_string(d_up) + " vs " +
                                       std::to_string(d_backbone) + ")");
  }
  if (fusion == Fusion::Sum && graph_input == GraphInput::FreeVector) {
    fail(ErrorKind::InvalidConfig, "sum fusion without the graph engine has no graph input");
  }
}

std::vector<std::string> param_names(const TransducerConfig& config) {
  std::vector<std::string> out;
  for (auto& s : shape_table(config)) out.push_back(s.name);
  std::sort(out.begin(), out.end());
  return out;
}

void init_params(ParamStore& store, const TransducerConfig& config, std::uint64_t seed) {
  config.validate();
  auto shapes = shape_table(config);
  std::sort(shapes.begin(), shapes.end(), [](const Shape& a, const Shape& b) { return a.name < b.name; });
  Rng rng(seed);
  for (const auto& s : shapes) {
    Matrix m;
    if (is_gain(s.name)) {
      m = Matrix::filled(s.rows, s.cols, 1.0);
    } else if (is_zero_init(s.name)) {
      m = Matrix::zeros(s.rows, s.cols);
    } else {
      m = glorot_uniform(s.rows, s.cols, rng);
    }
    store.add(s.name, std::move(m));
  }
}

ParamStore init_params(const TransducerConfig& config, std::uint64_t seed) {
  ParamStore store;
  init_params(store, config, seed);
  return store;
}

std::size_t count_trainable(const TransducerConfig& config) {
  config.validate();
  std::size_t total = 0;
  for (const auto& s : shape_table(config)) total += s.rows * s.cols;
  return total;
}

Bound bind(Tape& tape, ParamStore& store, const TransducerConfig& config) {
  Bound b;
  auto p = [&](std::string_view suffix) { return tape.parameter(store, name(suffix)); };
  if (config.graph_input == GraphInput::Gve) {
    b.g_gve = p("g_gve");
    b.w_down = p("w_down");
    b.gat_w_l = p("gat.w_l");
    b.gat_w_r = p("gat.w_r");
    b.gat_a = p("gat.a");
    b.gat_b = p("gat.b");
    b.gat_b_out = p("gat.b_out");
    b.w_up = p("w_up");
  } else {
    b.g_free = p("g_free");
  }
  if (config.fusion == Fusion::Abfl) {
    b.g_c = p("g_c");
    b.g_g = p("g_g");
    b.w_q = p("w_q");
    b.w_k = p("w_k");
    b.w_v = p("w_v");
    b.w_final = p("w_final");
  }
  return b;
}

Var gatv2_forward(Var h, const std::vector<std::vector<std::size_t>>& adjacency, const Bound& params,
                  double leaky_slope, std::vector<std::vector<double>>* attention) {
  Tape& tape = *h.tape();
  const std::size_t n = h.rows();
  const std::size_t d = params.gat_w_l.cols();
  if (adjacency.size() != n) {
    fail(ErrorKind::ShapeMismatch, std::to_string(adjacency.size()) + " neighbourhoods for " + std::to_string(n) + " nodes");
  }
  if (h.cols() != params.gat_w_l.rows()) fail(ErrorKind::ShapeMismatch, "GATv2 input width " + h.value().shape_string());
  Var left = ops::matmul(h, params.gat_w_l);
  Var right = ops::matmul(h, params.gat_w_r);

  const Matrix& lv = left.value();
  const Matrix& rv = right.value();
  const auto a = params.gat_a.value().row(0);
  const auto b = params.gat_b.value().row(0);
  const auto b_out = params.gat_b_out.value().row(0);

  std::vector<std::vector<double>> alpha(n);
  Matrix out(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& nbrs = adjacency[i];
    if (nbrs.empty()) fail(ErrorKind::ShapeMismatch, "node " + std::to_string(i) + " has no neighbours (missing self-loop)");
    std::vector<double> scores(nbrs.size(), 0.0);
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      const std::size_t j = nbrs[k];
      double e = 0.0;
      for (std::size_t c = 0; c < d; ++c) e += a[c] * leaky_relu_value(lv(i, c) + rv(j, c) + b[c], leaky_slope);
      scores[k] = e;
    }
    const double peak = *std::max_element(scores.begin(), scores.end());
    double total = 0.0;
    for (double& s : scores) total += (s = std::exp(s - peak));
    for (double& s : scores) s /= total;
    for (std::size_t k = 0; k < nbrs.size(); ++k)
      for (std::size_t c = 0; c < d; ++c) out(i, c) += scores[k] * rv(nbrs[k], c);
    for (std::size_t c = 0; c < d; ++c) out(i, c) += b_out[c];
    alpha[i] = std::move(scores);
  }
  if (attention != nullptr) *attention = alpha;

  const Var inputs[] = {left, right, params.gat_a, params.gat_b, params.gat_b_out};
  return tape.record(
      std::move(out), inputs,
      [left, right, a_var = params.gat_a, b_var = params.gat_b, bo_var = params.gat_b_out, adjacency,
       alpha = std::move(alpha), leaky_slope](Tape& t, const Matrix& g) {
        const Matrix& lv = left.value();
        const Matrix& rv = right.value();
        const auto a = a_var.value().row(0);
        const auto b = b_var.value().row(0);
        const std::size_t d = lv.cols();
        Matrix d_left(lv.rows(), d), d_right(rv.rows(), d), d_a(1, d), d_b(1, d), d_bo(1, d);
        std::vector<double> z(d);
        for (std::size_t i = 0; i < lv.rows(); ++i) {
          const auto& nbrs = adjacency[i];
          const auto& al = alpha[i];
          for (std::size_t c = 0; c < d; ++c) d_bo(0, c) += g(i, c);
          // d alpha_ij = g_i . R_j, then through the softmax.
          std::vector<double> d_alpha(nbrs.size());
          double weighted = 0.0;
          for (std::size_t k = 0; k < nbrs.size(); ++k) {
            double dot = 0.0;
            for (std::size_t c = 0; c < d; ++c) dot += g(i, c) * rv(nbrs[k], c);
            d_alpha[k] = dot;
            weighted += al[k] * dot;
          }
          for (std::size_t k = 0; k < nbrs.size(); ++k) {
            const std::size_t j = nbrs[k];
            for (std::size_t c = 0; c < d; ++c) d_right(j, c) += al[k] * g(i, c);
            const double d_score = al[k] * (d_alpha[k] - weighted);
            for (std::size_t c = 0; c < d; ++c) {
              z[c] = lv(i, c) + rv(j, c) + b[c];
              const double slope = z[c] >= 0.0 ? 1.0 : leaky_slope;
              d_a(0, c) += d_score * leaky_relu_value(z[c], leaky_slope);
              const double dz = d_score * a[c] * slope;
              d_left(i, c) += dz;
              d_right(j, c) += dz;
              d_b(0, c) += dz;
            }
          }
        }
        auto acc = [&t](Var v, const Matrix& delta) {
          if (!t.needs_grad(v)) return;
          auto dst = t.grad(v).values();
          auto src = delta.values();
          for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
        };
        acc(left, d_left);
        acc(right, d_right);
        acc(a_var, d_a);
        acc(b_var, d_b);
        acc(bo_var, d_bo);
      });
}

Var gve_forward(Tape& tape, const vec::GraphTensors& graph, const Bound& params, const TransducerConfig& config) {
  if (graph.node_count == 0) fail(ErrorKind::EmptyInput, "graph has no nodes");
  if (graph.h_init.cols() != config.d_init) {
    fail(ErrorKind::ShapeMismatch, "node features are " + graph.h_init.shape_string() + ", d_init is " +
                                       std::to_string(config.d_init));
  }
  Var h_init = tape.constant(graph.h_init);
  Var h_norm = ops::rms_norm_rows(h_init, params.g_gve, config.rms_eps);
  Var h_down = ops::matmul(h_norm, params.w_down);
  Var h_feature = gatv2_forward(h_down, graph.adjacency, params, config.leaky_slope);
  Var h_up = ops::matmul(h_feature, params.w_up);
  return ops::mean_pool_rows(h_up);
}

Var abfl_forward(Var c_init, Var graph_vector, const Bound& params, const TransducerConfig& config) {
  if (c_init.cols() != config.d_backbone) {
    fail(ErrorKind::ShapeMismatch, "code embeddings are " + c_init.value().shape_string() + ", d_backbone is " +
                                       std::to_string(config.d_backbone));
  }
  if (c_init.rows() == 0) fail(ErrorKind::EmptyInput, "no token embeddings");
  Var c_norm = ops::rms_norm_rows(c_init, params.g_c, config.rms_eps);
  Var g_norm = ops::rms_norm_rows(graph_vector, params.g_g, config.rms_eps);
  Var q = ops::matmul(c_norm, params.w_q);
  Var k = ops::matmul(g_norm, params.w_k);
  Var v = ops::matmul(c_norm, params.w_v);
  Var scores = ops::scale(ops::matmul(q, ops::transpose(k)), 1.0 / std::sqrt(static_cast<double>(config.d_abf)));
  Var weights = config.softmax_axis == SoftmaxAxis::Tokens
                    ? ops::transpose(ops::softmax_rows(ops::transpose(scores)))
                    : ops::softmax_rows(scores);
  Var fused = ops::matmul(ops::scale_rows(v, weights), params.w_final);
  return config.residual ? ops::add(c_init, fused) : fused;
}

Var fuse(Tape& tape, Var c_init, const vec::GraphTensors* graph, const Bound& params, const TransducerConfig& config) {
  Var g;
  if (config.graph_input == GraphInput::Gve) {
    if (graph == nullptr) fail(ErrorKind::InvalidConfig, "graph input required");
    g = gve_forward(tape, *graph, params, config);
  } else {
    g = params.g_free;
  }
  if (config.fusion == Fusion::Sum) return ops::add_row_broadcast(c_init, g);
  return abfl_forward(c_init, g, params, config);
}

Var transduce(Tape& tape, std::string_view code, Var c_init, const Bound& params, const TransducerConfig& config,
              const vec::VectorizerModel& vectorizer, std::size_t max_nodes) {
  const cpg::Cpg graph = cpg::build_cpg(code, max_nodes);
  const vec::GraphTensors tensors = vec::vectorize_graph(vectorizer, graph);
  return fuse(tape, c_init, &tensors, params, config);
}

}  // namespace ttune::transducer
