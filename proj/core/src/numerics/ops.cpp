// SPDX-License-Identifier: Apache-2.0
#include "ttune/numerics/ops.hpp"

#include <algorithm>
#include <cmath>

#include "ttune/error.hpp"

namespace ttune {

double leaky_relu_value(double x, double slope) { return x >= 0.0 ? x : slope * x; }

Matrix softmax_rows_values(const Matrix& a, bool causal) {
  if (a.empty()) fail(ErrorKind::EmptyInput, "softmax of an empty matrix");
  Matrix out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const std::size_t width = causal ? std::min(i + 1, a.cols()) : a.cols();
    double peak = a(i, 0);
    for (std::size_t j = 1; j < width; ++j) peak = std::max(peak, a(i, j));
    double total = 0.0;
    for (std::size_t j = 0; j < width; ++j) {
      out(i, j) = std::exp(a(i, j) - peak);
      total += out(i, j);
    }
    for (std::size_t j = 0; j < width; ++j) out(i, j) /= total;
  }
  return out;
}

std::vector<double> rms_norm_values(std::span<const double> x, std::span<const double> gain, double eps) {
  if (x.size() != gain.size() || x.empty()) {
    fail(ErrorKind::ShapeMismatch, "rms_norm over " + std::to_string(x.size()) + " values with " +
                                       std::to_string(gain.size()) + " gains");
  }
  double mean_sq = 0.0;
  for (double v : x) mean_sq += v * v;
  mean_sq /= static_cast<double>(x.size());
  const double inv = 1.0 / std::sqrt(mean_sq + eps);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * inv * gain[i];
  return out;
}

std::vector<double> mean_pool_values(const Matrix& h) {
  if (h.rows() == 0) fail(ErrorKind::EmptyInput, "mean pooling over zero rows");
  std::vector<double> out(h.cols(), 0.0);
  for (std::size_t i = 0; i < h.rows(); ++i)
    for (std::size_t j = 0; j < h.cols(); ++j) out[j] += h(i, j);
  for (double& v : out) v /= static_cast<double>(h.rows());
  return out;
}

}  // namespace ttune

namespace ttune::ops {
namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (!a.same_shape(b)) fail(ErrorKind::ShapeMismatch, std::string(what) + " " + a.shape_string() + " vs " + b.shape_string());
}

void add_into(Matrix& dst, const Matrix& src, double factor = 1.0) {
  auto d = dst.values();
  auto s = src.values();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += factor * s[i];
}

Tape& tape_of(Var a, Var b) {
  if (a.tape() != b.tape()) fail(ErrorKind::InvalidConfig, "operands recorded on different tapes");
  return *a.tape();
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  Matrix out = matmul_values(a.value(), b.value());
  return t.record(std::move(out), {a, b}, [a, b](Tape& tape, const Matrix& g) {
    if (tape.needs_grad(a)) add_into(tape.grad(a), matmul_values(g, transpose_values(b.value())));
    if (tape.needs_grad(b)) add_into(tape.grad(b), matmul_values(transpose_values(a.value()), g));
  });
}

Var transpose(Var a) {
  return a.tape()->record(transpose_values(a.value()), {a}, [a](Tape& tape, const Matrix& g) {
    add_into(tape.grad(a), transpose_values(g));
  });
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "add");
  Matrix out = a.value();
  add_into(out, b.value());
  return t.record(std::move(out), {a, b}, [a, b](Tape& tape, const Matrix& g) {
    if (tape.needs_grad(a)) add_into(tape.grad(a), g);
    if (tape.needs_grad(b)) add_into(tape.grad(b), g);
  });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  Matrix out = a.value();
  add_into(out, b.value(), -1.0);
  return t.record(std::move(out), {a, b}, [a, b](Tape& tape, const Matrix& g) {
    if (tape.needs_grad(a)) add_into(tape.grad(a), g);
    if (tape.needs_grad(b)) add_into(tape.grad(b), g, -1.0);
  });
}

Var scale(Var a, double s) {
  Matrix out = a.value();
  for (double& v : out.values()) v *= s;
  out.check_finite();
  return a.tape()->record(std::move(out), {a}, [a, s](Tape& tape, const Matrix& g) {
    add_into(tape.grad(a), g, s);
  });
}

Var hadamard(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same_shape(a.value(), b.value(), "hadamard");
  Matrix out = a.value();
  auto bv = b.value().values();
  for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] *= bv[i];
  out.check_finite();
  return t.record(std::move(out), {a, b}, [a, b](Tape& tape, const Matrix& g) {
    const auto gv = g.values();
    if (tape.needs_grad(a)) {
      auto da = tape.grad(a).values();
      const auto bv = b.value().values();
      for (std::size_t i = 0; i < da.size(); ++i) da[i] += gv[i] * bv[i];
    }
    if (tape.needs_grad(b)) {
      auto db = tape.grad(b).values();
      const auto av = a.value().values();
      for (std::size_t i = 0; i < db.size(); ++i) db[i] += gv[i] * av[i];
    }
  });
}

Var leaky_relu(Var a, double slope) {
  Matrix out = a.value();
  for (double& v : out.values()) v = leaky_relu_value(v, slope);
  return a.tape()->record(std::move(out), {a}, [a, slope](Tape& tape, const Matrix& g) {
    auto da = tape.grad(a).values();
    const auto av = a.value().values();
    const auto gv = g.values();
    for (std::size_t i = 0; i < da.size(); ++i) da[i] += gv[i] * (av[i] >= 0.0 ? 1.0 : slope);
  });
}

Var elementwise(Elementwise kind, Var a, Var b) {
  switch (kind) {
    case Elementwise::Add: return add(a, b);
    case Elementwise::Sub: return sub(a, b);
    case Elementwise::Hadamard: return hadamard(a, b);
  }
  fail(ErrorKind::InvalidConfig, "unknown elementwise kind");
}

Var softmax_rows(Var a, bool causal) {
  Matrix out = softmax_rows_values(a.value(), causal);
  Matrix y = out;
  return a.tape()->record(std::move(out), {a}, [a, y = std::move(y)](Tape& tape, const Matrix& g) {
    Matrix& da = tape.grad(a);
    for (std::size_t i = 0; i < y.rows(); ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < y.cols(); ++j) dot += g(i, j) * y(i, j);
      for (std::size_t j = 0; j < y.cols(); ++j) da(i, j) += y(i, j) * (g(i, j) - dot);
    }
  });
}

Var rms_norm_rows(Var x, Var gain, double eps) {
  Tape& t = tape_of(x, gain);
  const Matrix& xv = x.value();
  const Matrix& gv = gain.value();
  if (gv.rows() != 1 || gv.cols() != xv.cols()) {
    fail(ErrorKind::ShapeMismatch, "rms_norm input " + xv.shape_string() + " with gain " + gv.shape_string());
  }
  Matrix out(xv.rows(), xv.cols());
  for (std::size_t i = 0; i < xv.rows(); ++i) {
    auto row = rms_norm_values(xv.row(i), gv.row(0), eps);
    std::copy(row.begin(), row.end(), out.row(i).begin());
  }
  return t.record(std::move(out), {x, gain}, [x, gain, eps](Tape& tape, const Matrix& g) {
    const Matrix& xv = x.value();
    const Matrix& gv = gain.value();
    const std::size_t n = xv.cols();
    const bool want_x = tape.needs_grad(x);
    const bool want_g = tape.needs_grad(gain);
    for (std::size_t i = 0; i < xv.rows(); ++i) {
      double mean_sq = 0.0;
      for (std::size_t j = 0; j < n; ++j) mean_sq += xv(i, j) * xv(i, j);
      mean_sq /= static_cast<double>(n);
      const double r = 1.0 / std::sqrt(mean_sq + eps);
      if (want_g) {
        Matrix& dg = tape.grad(gain);
        for (std::size_t j = 0; j < n; ++j) dg(0, j) += g(i, j) * xv(i, j) * r;
      }
      if (want_x) {
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += g(i, j) * gv(0, j) * xv(i, j);
        const double coeff = r * r * r * dot / static_cast<double>(n);
        Matrix& dx = tape.grad(x);
        for (std::size_t j = 0; j < n; ++j) dx(i, j) += r * gv(0, j) * g(i, j) - coeff * xv(i, j);
      }
    }
  });
}

Var mean_pool_rows(Var h) {
  Matrix out = Matrix::row_vector(mean_pool_values(h.value()));
  return h.tape()->record(std::move(out), {h}, [h](Tape& tape, const Matrix& g) {
    Matrix& dh = tape.grad(h);
    const double inv = 1.0 / static_cast<double>(dh.rows());
    for (std::size_t i = 0; i < dh.rows(); ++i)
      for (std::size_t j = 0; j < dh.cols(); ++j) dh(i, j) += g(0, j) * inv;
  });
}

Var sum(Var a) {
  double total = 0.0;
  for (double v : a.value().values()) total += v;
  return a.tape()->record(Matrix(1, 1, {total}), {a}, [a](Tape& tape, const Matrix& g) {
    for (double& v : tape.grad(a).values()) v += g(0, 0);
  });
}

Var add_row_broadcast(Var a, Var row) {
  Tape& t = tape_of(a, row);
  const Matrix& av = a.value();
  const Matrix& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != av.cols()) {
    fail(ErrorKind::ShapeMismatch, "broadcast " + rv.shape_string() + " over " + av.shape_string());
  }
  Matrix out = av;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) += rv(0, j);
  return t.record(std::move(out), {a, row}, [a, row](Tape& tape, const Matrix& g) {
    if (tape.needs_grad(a)) add_into(tape.grad(a), g);
    if (tape.needs_grad(row)) {
      Matrix& dr = tape.grad(row);
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) dr(0, j) += g(i, j);
    }
  });
}

Var scale_rows(Var a, Var weights) {
  Tape& t = tape_of(a, weights);
  const Matrix& av = a.value();
  const Matrix& wv = weights.value();
  if (wv.cols() != 1 || wv.rows() != av.rows()) {
    fail(ErrorKind::ShapeMismatch, "row weights " + wv.shape_string() + " for " + av.shape_string());
  }
  Matrix out = av;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (std::size_t j = 0; j < out.cols(); ++j) out(i, j) *= wv(i, 0);
  return t.record(std::move(out), {a, weights}, [a, weights](Tape& tape, const Matrix& g) {
    const Matrix& av = a.value();
    const Matrix& wv = weights.value();
    if (tape.needs_grad(a)) {
      Matrix& da = tape.grad(a);
      for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) da(i, j) += g(i, j) * wv(i, 0);
    }
    if (tape.needs_grad(weights)) {
      Matrix& dw = tape.grad(weights);
      for (std::size_t i = 0; i < g.rows(); ++i) {
        double dot = 0.0;
        for (std::size_t j = 0; j < g.cols(); ++j) dot += g(i, j) * av(i, j);
        dw(i, 0) += dot;
      }
    }
  });
}

Var concat_rows(Var a, Var b) {
  Tape& t = tape_of(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.cols()) fail(ErrorKind::ShapeMismatch, "concat " + av.shape_string() + " with " + bv.shape_string());
  std::vector<double> values(av.values().begin(), av.values().end());
  values.insert(values.end(), bv.values().begin(), bv.values().end());
  const std::size_t split = av.rows();
  return t.record(Matrix(av.rows() + bv.rows(), av.cols(), std::move(values)), {a, b},
                  [a, b, split](Tape& tape, const Matrix& g) {
                    if (tape.needs_grad(a)) {
                      Matrix& da = tape.grad(a);
                      for (std::size_t i = 0; i < split; ++i)
                        for (std::size_t j = 0; j < g.cols(); ++j) da(i, j) += g(i, j);
                    }
                    if (tape.needs_grad(b)) {
                      Matrix& db = tape.grad(b);
                      for (std::size_t i = split; i < g.rows(); ++i)
                        for (std::size_t j = 0; j < g.cols(); ++j) db(i - split, j) += g(i, j);
                    }
                  });
}

Var gather_rows(Var table, std::span<const std::size_t> ids) {
  const Matrix& tv = table.value();
  Matrix out(ids.size(), tv.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] >= tv.rows()) fail(ErrorKind::OutOfRange, "row id " + std::to_string(ids[i]) + " of " + tv.shape_string());
    std::copy(tv.row(ids[i]).begin(), tv.row(ids[i]).end(), out.row(i).begin());
  }
  std::vector<std::size_t> kept(ids.begin(), ids.end());
  return table.tape()->record(std::move(out), {table}, [table, kept = std::move(kept)](Tape& tape, const Matrix& g) {
    Matrix& dt = tape.grad(table);
    for (std::size_t i = 0; i < kept.size(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) dt(kept[i], j) += g(i, j);
  });
}

Var cross_entropy(Var logits, std::span<const std::size_t> targets) {
  const Matrix& lv = logits.value();
  if (targets.size() != lv.rows() || targets.empty()) {
    fail(ErrorKind::ShapeMismatch, std::to_string(targets.size()) + " targets for logits " + lv.shape_string());
  }
  Matrix probs = softmax_rows_values(lv);
  double total = 0.0;
  for (std::size_t i = 0; i < lv.rows(); ++i) {
    if (targets[i] >= lv.cols()) fail(ErrorKind::OutOfRange, "target id out of vocabulary");
    double peak = lv(i, 0);
    for (std::size_t j = 1; j < lv.cols(); ++j) peak = std::max(peak, lv(i, j));
    double z = 0.0;
    for (std::size_t j = 0; j < lv.cols(); ++j) z += std::exp(lv(i, j) - peak);
    total += std::log(z) + peak - lv(i, targets[i]);
  }
  const double n = static_cast<double>(lv.rows());
  std::vector<std::size_t> kept(targets.begin(), targets.end());
  return logits.tape()->record(
      Matrix(1, 1, {total / n}), {logits},
      [logits, probs = std::move(probs), kept = std::move(kept), n](Tape& tape, const Matrix& g) {
        Matrix& dl = tape.grad(logits);
        const double s = g(0, 0) / n;
        for (std::size_t i = 0; i < probs.rows(); ++i) {
          for (std::size_t j = 0; j < probs.cols(); ++j) dl(i, j) += s * probs(i, j);
          dl(i, kept[i]) -= s;
        }
      });
}

}  // namespace ttune::ops
