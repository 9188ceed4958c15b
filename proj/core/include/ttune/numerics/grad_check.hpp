// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>

#include "ttune/numerics/param_store.hpp"
#include "ttune/numerics/tape.hpp"

namespace ttune {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  std::size_t checked_scalars = 0;
};

/// Builds a scalar loss on the given tape from the current values in the
/// store. Must be deterministic.
using LossFn = std::function<Var(Tape&)>;

/// Central finite differences against the analytic gradient for every
/// trainable scalar. Relative error is |a - n| / max(|a|, |n|, floor), with
/// floor = 1e-5 so entries whose true gradient is ~0 are compared absolutely.
GradCheckResult grad_check(const LossFn& f, ParamStore& store, double eps = 1e-5);

}  // namespace ttune
