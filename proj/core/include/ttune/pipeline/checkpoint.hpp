// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include <cstddef>

#include "ttune/numerics/matrix.hpp"
#include "ttune/pipeline/session.hpp"

namespace ttune::pipeline {

struct TrainConfig {
  std::size_t epochs = 1;
  std::size_t batch = 8;
  double lr = 3e-4;
  double max_grad_norm = 1.0;
  std::uint64_t seed = 8;
  std::size_t eval_batch = 32;
  /// Stop after this many optimizer steps; 0 means run every epoch out.
  std::size_t max_steps = 0;
  double weight_decay = 0.01;

  void validate() const;
};

inline constexpr int kCheckpointVersion = 1;

/// Everything needed to rebuild a session: config snapshot plus the
/// trainable tensors (backbone tensors only for full_ft).
struct Checkpoint {
  ModelConfig config;
  TrainConfig train;
  std::map<std::string, Matrix> params;
};

Checkpoint make_checkpoint(const Session& session, const TrainConfig& train);
/// Rebuilds the backbone from the config and installs the stored tensors.
Session restore_session(const Checkpoint& checkpoint);

std::string checkpoint_to_json(const Checkpoint& checkpoint);
/// Throws VersionMismatch for another format_version, SchemaError (with a
/// JSON path) for anything malformed.
Checkpoint checkpoint_from_json(std::string_view text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string model_config_to_json(const ModelConfig& config);
ModelConfig model_config_from_json(std::string_view text);

}  // namespace ttune::pipeline
