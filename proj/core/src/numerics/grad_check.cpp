// SPDX-License-Identifier: Apache-2.0
#include "ttune/numerics/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace ttune {
namespace {

constexpr double kDenominatorFloor = 1e-5;

double evaluate(const LossFn& f) {
  Tape tape(false);
  return f(tape).value()(0, 0);
}

}  // namespace

GradCheckResult grad_check(const LossFn& f, ParamStore& store, double eps) {
  store.zero_grad();
  {
    Tape tape(true);
    Var loss = f(tape);
    tape.backward(loss);
  }
  GradCheckResult result;
  for (const auto& name : store.trainable_names()) {
    Parameter& p = store.at(name);
    const Matrix analytic = p.grad ? *p.grad : Matrix(p.value.rows(), p.value.cols());
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double original = p.value.values()[i];
      p.value.values()[i] = original + eps;
      const double up = evaluate(f);
      p.value.values()[i] = original - eps;
      const double down = evaluate(f);
      p.value.values()[i] = original;
      const double numeric = (up - down) / (2.0 * eps);
      const double a = analytic.values()[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), kDenominatorFloor});
      const double rel = std::abs(a - numeric) / denom;
      ++result.checked_scalars;
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_parameter = name;
        result.worst_index = i;
      }
    }
  }
  store.zero_grad();
  return result;
}

}  // namespace ttune
