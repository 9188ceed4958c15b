// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ttune/numerics/matrix.hpp"

namespace ttune {

struct Parameter {
  Matrix value;
  std::optional<Matrix> grad;
  // Set the first time a backward pass writes a gradient; never cleared.
  bool received_grad = false;
};

/// Named parameters in name order. Frozen names never receive gradients and
/// are never touched by the optimizer.
class ParamStore {
 public:
  Parameter& add(const std::string& name, Matrix value, bool frozen = false);
  void erase_prefix(const std::string& prefix);

  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  const Matrix& value(const std::string& name) const { return at(name).value; }

  void freeze(const std::string& name);
  void unfreeze(const std::string& name);
  bool is_frozen(const std::string& name) const { return frozen_.count(name) != 0; }

  std::vector<std::string> names() const;
  std::vector<std::string> names_with_prefix(const std::string& prefix) const;
  std::vector<std::string> trainable_names() const;

  std::size_t trainable_scalar_count() const;
  /// Number of trainable scalars whose gradient buffer has ever been written.
  std::size_t observed_grad_scalar_count() const;
  void reset_grad_observations();

  void zero_grad();

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }
  std::size_t size() const { return params_.size(); }

 private:
  std::map<std::string, Parameter> params_;
  std::set<std::string> frozen_;
};

}  // namespace ttune
