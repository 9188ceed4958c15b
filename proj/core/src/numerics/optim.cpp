// SPDX-License-Identifier: Apache-2.0
#include "ttune/numerics/optim.hpp"

#include <cmath>

#include "ttune/error.hpp"

namespace ttune {

void adamw_step(ParamStore& store, OptimState& state, double lr) {
  const AdamWConfig& cfg = state.config;
  for (const auto& name : store.trainable_names()) {
    if (!store.at(name).grad) fail(ErrorKind::MissingGrad, "no gradient for trainable parameter " + name);
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(cfg.beta1, t);
  const double bias2 = 1.0 - std::pow(cfg.beta2, t);
  for (auto& [name, p] : store) {
    if (store.is_frozen(name)) {
      p.grad.reset();
      continue;
    }
    auto [m_it, m_new] = state.first_moment.try_emplace(name, p.value.rows(), p.value.cols());
    auto [v_it, v_new] = state.second_moment.try_emplace(name, p.value.rows(), p.value.cols());
    auto m = m_it->second.values();
    auto v = v_it->second.values();
    auto theta = p.value.values();
    const auto g = p.grad->values();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      theta[i] -= lr * cfg.weight_decay * theta[i];
      theta[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
    p.value.check_finite();
    p.grad.reset();
  }
}

double global_grad_norm(const ParamStore& store) {
  double sq = 0.0;
  for (const auto& [name, p] : store) {
    if (store.is_frozen(name) || !p.grad) continue;
    for (double g : p.grad->values()) sq += g * g;
  }
  return std::sqrt(sq);
}

double clip_global_norm(ParamStore& store, double max_norm) {
  if (!(max_norm > 0.0)) fail(ErrorKind::OutOfRange, "max_norm must be positive");
  const double norm = global_grad_norm(store);
  if (norm <= max_norm) return 1.0;
  const double factor = max_norm / norm;
  for (auto& [name, p] : store) {
    if (store.is_frozen(name) || !p.grad) continue;
    for (double& g : p.grad->values()) g *= factor;
  }
  return factor;
}

double linear_lr_factor(std::size_t step, std::size_t total_steps) {
  if (total_steps == 0 || step > total_steps) {
    fail(ErrorKind::OutOfRange, "step " + std::to_string(step) + " of " + std::to_string(total_steps));
  }
  return 1.0 - static_cast<double>(step) / static_cast<double>(total_steps);
}

}  // namespace ttune
