// SPDX-License-Identifier: Apache-2.0
#include "ttune/numerics/tape.hpp"

#include "ttune/error.hpp"

namespace ttune {

const Matrix& Var::value() const {
  if (tape_ == nullptr) fail(ErrorKind::InvalidConfig, "use of an unbound Var");
  return tape_->value(*this);
}

std::size_t Tape::check(Var v) const {
  if (v.tape_ != this || v.id_ >= nodes_.size()) fail(ErrorKind::InvalidConfig, "Var does not belong to this tape");
  return v.id_;
}

Var Tape::constant(Matrix value) {
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(ParamStore& store, const std::string& name) {
  Parameter& p = store.at(name);
  Node node;
  node.value = p.value;
  if (grad_enabled_ && !store.is_frozen(name)) {
    node.needs_grad = true;
    node.param = &p;
  }
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::span<const Var> inputs, Backprop backprop) {
  Node node;
  node.value = std::move(value);
  if (grad_enabled_) {
    for (const Var& in : inputs) {
      if (nodes_[check(in)].needs_grad) {
        node.needs_grad = true;
        break;
      }
    }
    if (node.needs_grad) node.backprop = std::move(backprop);
  }
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Matrix& Tape::grad(Var v) {
  Node& node = nodes_[check(v)];
  if (!node.has_grad) {
    node.grad = Matrix(node.value.rows(), node.value.cols());
    node.has_grad = true;
  }
  return node.grad;
}

void Tape::backward(Var loss) {
  const std::size_t root = check(loss);
  if (nodes_[root].value.rows() != 1 || nodes_[root].value.cols() != 1) {
    fail(ErrorKind::NotScalar, "backward needs a 1x1 loss, got " + nodes_[root].value.shape_string());
  }
  if (nodes_[root].needs_grad) {
    grad(loss)(0, 0) = 1.0;
    for (std::size_t i = root + 1; i-- > 0;) {
      Node& node = nodes_[i];
      if (!node.has_grad || !node.backprop) continue;
      node.backprop(*this, node.grad);
    }
    for (Node& node : nodes_) {
      if (node.param == nullptr || !node.has_grad) continue;
      node.grad.check_finite();
      Parameter& p = *node.param;
      if (p.grad) {
        auto dst = p.grad->values();
        auto src = node.grad.values();
        for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
      } else {
        p.grad = std::move(node.grad);
      }
      p.received_grad = true;
    }
  }
  reset();
}

void Tape::reset() { nodes_.clear(); }

}  // namespace ttune
