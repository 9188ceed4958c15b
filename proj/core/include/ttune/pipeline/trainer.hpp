// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ttune/pipeline/bleu.hpp"
#include "ttune/pipeline/checkpoint.hpp"
#include "ttune/pipeline/dataset.hpp"
#include "ttune/pipeline/session.hpp"

namespace ttune::pipeline {

struct TrainStats {
  std::size_t steps = 0;
  std::size_t used_samples = 0;
  /// Samples dropped because their code did not parse or its graph was too
  /// large (graph modes only).
  std::size_t skipped_samples = 0;
  std::vector<double> step_losses;  // mean loss of each batch, pre-update
  std::size_t declared_params = 0;
  std::size_t observed_grad_params = 0;
};

/// Seeded shuffle per epoch, mean loss per batch, global-norm clipping,
/// AdamW with a linear decay over the planned number of steps. Only
/// trainable tensors change. Throws EmptyDataset / AllSamplesSkipped.
TrainStats train(Session& session, const std::vector<Sample>& dataset, const TrainConfig& config);

/// Mean per-sample loss without recording gradients; skipped samples as in
/// train().
double mean_loss(Session& session, const std::vector<Sample>& dataset);

/// Builds a vocabulary from every code and target text of the dataset.
backbone::Vocab build_vocab(const std::vector<Sample>& dataset);

struct EvalResult {
  BleuStats bleu;
  std::vector<std::string> hypotheses;
  /// Graph modes: samples whose code failed to parse; they contribute an
  /// empty hypothesis.
  std::size_t failed_samples = 0;
};

/// Generates every sample (beam search) and scores corpus smoothed BLEU.
/// `max_len` 0 means one more than the longest target.
EvalResult evaluate(Session& session, const std::vector<Sample>& dataset, std::size_t beam = 4,
                    std::size_t max_len = 0);

/// Throws DimMismatch when the checkpoint was trained for another backbone
/// width.
void check_compatible(const Checkpoint& checkpoint, std::size_t d_backbone);

struct RunReport {
  std::string mode;
  std::size_t trainable_param_count = 0;  // observed gradient-receiving scalars
  std::size_t declared_param_count = 0;
  std::string metric_name;
  double metric_value = 0.0;
  std::uint64_t seed = 0;
  double wall_time = 0.0;  // seconds
  std::size_t steps = 0;
  std::size_t skipped_samples = 0;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

std::string run_report_to_json(const RunReport& report);

}  // namespace ttune::pipeline
