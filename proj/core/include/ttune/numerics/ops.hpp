// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ttune/numerics/tape.hpp"

namespace ttune::ops {

Var matmul(Var a, Var b);
Var transpose(Var a);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double s);
Var hadamard(Var a, Var b);
Var leaky_relu(Var a, double slope);

enum class Elementwise { Add, Sub, Hadamard };
Var elementwise(Elementwise kind, Var a, Var b);

/// Row-wise softmax with max subtraction. With `causal`, row i only spans
/// columns 0..i and the rest are exactly zero.
Var softmax_rows(Var a, bool causal = false);

/// out_ij = x_ij / sqrt(mean_j(x_ij^2) + eps) * g_j, applied to every row.
/// `gain` is 1 x cols.
Var rms_norm_rows(Var x, Var gain, double eps);

Var mean_pool_rows(Var h);
Var sum(Var a);

/// a (n x d) plus the 1 x d row broadcast over every row.
Var add_row_broadcast(Var a, Var row);
/// Row i of a (n x d) scaled by weights(i, 0); weights is n x 1.
Var scale_rows(Var a, Var weights);
/// Stacks a on top of b.
Var concat_rows(Var a, Var b);
/// out row i = table row ids[i].
Var gather_rows(Var table, std::span<const std::size_t> ids);

/// Mean over rows of -log softmax(logits_i)[targets_i].
Var cross_entropy(Var logits, std::span<const std::size_t> targets);

}  // namespace ttune::ops

namespace ttune {

// Value-only kernels shared by the tape ops and by oracles that must not
// go through the tape.
Matrix softmax_rows_values(const Matrix& a, bool causal = false);
std::vector<double> rms_norm_values(std::span<const double> x, std::span<const double> gain, double eps);
std::vector<double> mean_pool_values(const Matrix& h);
double leaky_relu_value(double x, double slope);

}  // namespace ttune
