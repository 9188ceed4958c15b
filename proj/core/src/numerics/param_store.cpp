// SPDX-License-Identifier: Apache-2.0
#include "ttune/numerics/param_store.hpp"

#include "ttune/error.hpp"

namespace ttune {

Parameter& ParamStore::add(const std::string& name, Matrix value, bool frozen) {
  if (params_.count(name) != 0) fail(ErrorKind::InvalidConfig, "duplicate parameter " + name);
  auto& p = params_[name];
  p.value = std::move(value);
  if (frozen) frozen_.insert(name);
  return p;
}

void ParamStore::erase_prefix(const std::string& prefix) {
  for (auto it = params_.lower_bound(prefix); it != params_.end() && it->first.rfind(prefix, 0) == 0;) {
    frozen_.erase(it->first);
    it = params_.erase(it);
  }
}

Parameter& ParamStore::at(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) fail(ErrorKind::SchemaError, "unknown parameter " + name);
  return it->second;
}

const Parameter& ParamStore::at(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) fail(ErrorKind::SchemaError, "unknown parameter " + name);
  return it->second;
}

void ParamStore::freeze(const std::string& name) {
  at(name).grad.reset();
  frozen_.insert(name);
}

void ParamStore::unfreeze(const std::string& name) {
  at(name);
  frozen_.erase(name);
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(params_.size());
  for (const auto& [name, _] : params_) out.push_back(name);
  return out;
}

std::vector<std::string> ParamStore::names_with_prefix(const std::string& prefix) const {
  std::vector<std::string> out;
  for (auto it = params_.lower_bound(prefix); it != params_.end() && it->first.rfind(prefix, 0) == 0; ++it)
    out.push_back(it->first);
  return out;
}

std::vector<std::string> ParamStore::trainable_names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : params_)
    if (!is_frozen(name)) out.push_back(name);
  return out;
}

std::size_t ParamStore::trainable_scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, p] : params_)
    if (!is_frozen(name)) n += p.value.size();
  return n;
}

std::size_t ParamStore::observed_grad_scalar_count() const {
  std::size_t n = 0;
  for (const auto& [name, p] : params_)
    if (!is_frozen(name) && p.received_grad) n += p.value.size();
  return n;
}

void ParamStore::reset_grad_observations() {
  for (auto& [_, p] : params_) p.received_grad = false;
}

void ParamStore::zero_grad() {
  for (auto& [_, p] : params_) p.grad.reset();
}

}  // namespace ttune
