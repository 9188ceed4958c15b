// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <string>

#include "ttune/numerics/param_store.hpp"

namespace ttune {

struct AdamWConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
};

struct OptimState {
  AdamWConfig config;
  std::size_t step = 0;
  std::map<std::string, Matrix> first_moment;
  std::map<std::string, Matrix> second_moment;
};

/// One decoupled-weight-decay Adam update with bias correction, applied to
/// every non-frozen parameter at learning rate `lr`. Gradients are cleared
/// afterwards (frozen ones included). Throws MissingGrad when a trainable
/// parameter has no gradient.
void adamw_step(ParamStore& store, OptimState& state, double lr);

/// Scales all trainable gradients so their global L2 norm is at most
/// `max_norm`. Returns the factor applied (1 when no clipping happened).
double clip_global_norm(ParamStore& store, double max_norm);

double global_grad_norm(const ParamStore& store);

/// Linear decay to zero without warmup: 1 - step / total_steps.
double linear_lr_factor(std::size_t step, std::size_t total_steps);

}  // namespace ttune
