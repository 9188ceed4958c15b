// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "ttune/numerics/matrix.hpp"
#include "ttune/numerics/param_store.hpp"

namespace ttune {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; valid until the tape
/// is reset by backward() or destroyed.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  Tape* tape() const noexcept { return tape_; }
  std::size_t id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode tape over whole matrices. Nodes are appended in evaluation
/// order, so the reverse sweep in backward() is a valid topological order.
class Tape {
 public:
  using Backprop = std::function<void(Tape&, const Matrix& grad_out)>;

  explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  /// Frozen parameters enter as constants and never get a gradient buffer.
  Var parameter(ParamStore& store, const std::string& name);

  /// Appends an op result. `backprop` is kept only when some input needs a
  /// gradient; it receives the node's accumulated output gradient.
  Var record(Matrix value, std::span<const Var> inputs, Backprop backprop);
  Var record(Matrix value, std::initializer_list<Var> inputs, Backprop backprop) {
    return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()), std::move(backprop));
  }

  const Matrix& value(Var v) const { return nodes_[check(v)].value; }
  bool needs_grad(Var v) const { return nodes_[check(v)].needs_grad; }
  /// Gradient accumulator for `v`, allocated as zeros on first use.
  Matrix& grad(Var v);

  /// Seeds d(loss)/d(loss) = 1, sweeps in reverse, adds leaf gradients into
  /// their Parameter::grad buffers, then clears the tape.
  void backward(Var loss);
  void reset();

  bool grad_enabled() const noexcept { return grad_enabled_; }
  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool has_grad = false;
    bool needs_grad = false;
    Parameter* param = nullptr;
    Backprop backprop;
  };

  std::size_t check(Var v) const;

  bool grad_enabled_;
  std::vector<Node> nodes_;
};

}  // namespace ttune
