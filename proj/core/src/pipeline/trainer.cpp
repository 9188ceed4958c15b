// SPDX-License-Identifier: Apache-2.0
#include "ttune/pipeline/trainer.hpp"

#include <algorithm>
#include <numeric>

#include <json.hpp>

#include "ttune/error.hpp"
#include "ttune/numerics/ops.hpp"
#include "ttune/numerics/optim.hpp"
#include "ttune/numerics/random.hpp"
#include "ttune/text/tokenize.hpp"

namespace ttune::pipeline {

namespace {

bool skippable(const Error& e) {
  return e.kind() == ErrorKind::SyntaxError || e.kind() == ErrorKind::GraphTooLarge;
}

}  // namespace

backbone::Vocab build_vocab(const std::vector<Sample>& dataset) {
  std::vector<std::string> texts;
  texts.reserve(2 * dataset.size());
  for (const auto& s : dataset) {
    texts.push_back(s.code);
    texts.push_back(s.target);
  }
  return backbone::Vocab::build(texts);
}

TrainStats train(Session& session, const std::vector<Sample>& dataset, const TrainConfig& config) {
  config.validate();
  if (dataset.empty()) fail(ErrorKind::EmptyDataset, "training set has no samples");

  TrainStats stats;
  std::vector<Prepared> prepared;
  prepared.reserve(dataset.size());
  for (const auto& s : dataset) {
    try {
      prepared.push_back(session.prepare(s));
    } catch (const Error& e) {
      if (!session.mode().uses_graph() || !skippable(e)) throw;
      ++stats.skipped_samples;
    }
  }
  if (prepared.empty()) {
    fail(ErrorKind::AllSamplesSkipped, "all " + std::to_string(dataset.size()) + " samples failed graph extraction");
  }
  stats.used_samples = prepared.size();

  ParamStore& store = session.store();
  store.reset_grad_observations();
  store.zero_grad();
  stats.declared_params = store.trainable_scalar_count();
  if (stats.declared_params == 0) return stats;

  const std::size_t batches_per_epoch = (prepared.size() + config.batch - 1) / config.batch;
  std::size_t total = config.epochs * batches_per_epoch;
  if (config.max_steps > 0) total = std::min(total, config.max_steps);
  if (total == 0) return stats;

  OptimState optim;
  optim.config.lr = config.lr;
  optim.config.weight_decay = config.weight_decay;
  Rng rng(config.seed);
  std::vector<std::size_t> order(prepared.size());

  for (std::size_t epoch = 0; epoch < config.epochs && stats.steps < total; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t start = 0; start < order.size() && stats.steps < total; start += config.batch) {
      const std::size_t end = std::min(order.size(), start + config.batch);
      const double inv = 1.0 / static_cast<double>(end - start);
      double batch_loss = 0.0;
      for (std::size_t i = start; i < end; ++i) {
        Tape tape;
        Var loss = session.loss(tape, prepared[order[i]]);
        batch_loss += loss.value()(0, 0) * inv;
        tape.backward(ops::scale(loss, inv));
      }
      clip_global_norm(store, config.max_grad_norm);
      adamw_step(store, optim, config.lr * linear_lr_factor(stats.steps, total));
      stats.step_losses.push_back(batch_loss);
      ++stats.steps;
    }
  }
  stats.observed_grad_params = store.observed_grad_scalar_count();
  return stats;
}

double mean_loss(Session& session, const std::vector<Sample>& dataset) {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& s : dataset) {
    Prepared p;
    try {
      p = session.prepare(s);
    } catch (const Error& e) {
      if (!session.mode().uses_graph() || !skippable(e)) throw;
      continue;
    }
    Tape tape(false);
    total += session.loss(tape, p).value()(0, 0);
    ++n;
  }
  if (n == 0) fail(ErrorKind::AllSamplesSkipped, "no usable samples");
  return total / static_cast<double>(n);
}

EvalResult evaluate(Session& session, const std::vector<Sample>& dataset, std::size_t beam, std::size_t max_len) {
  if (dataset.empty()) fail(ErrorKind::EmptyDataset, "evaluation set has no samples");
  if (max_len == 0) {
    for (const auto& s : dataset) max_len = std::max(max_len, split_tokens(s.target).size());
    max_len += 1;
  }
  EvalResult result;
  std::vector<std::vector<std::string>> hyps, refs;
  for (const auto& s : dataset) {
    std::string hyp;
    try {
      hyp = session.config().vocab.decode(session.generate(session.prepare_code(s.code), max_len, beam));
    } catch (const Error& e) {
      if (!session.mode().uses_graph() || !skippable(e)) throw;
      ++result.failed_samples;
    }
    hyps.push_back(split_tokens(hyp));
    refs.push_back(split_tokens(s.target));
    result.hypotheses.push_back(std::move(hyp));
  }
  result.bleu = corpus_bleu(hyps, refs);
  return result;
}

void check_compatible(const Checkpoint& checkpoint, std::size_t d_backbone) {
  if (checkpoint.config.backbone.d_model != d_backbone) {
    fail(ErrorKind::DimMismatch, "checkpoint was trained with d_backbone " +
                                     std::to_string(checkpoint.config.backbone.d_model) + ", requested " +
                                     std::to_string(d_backbone));
  }
}

std::string run_report_to_json(const RunReport& r) {
  nlohmann::json j = {{"mode", r.mode},
                      {"trainable_param_count", r.trainable_param_count},
                      {"declared_param_count", r.declared_param_count},
                      {"metric", {{"name", r.metric_name}, {"value", r.metric_value}}},
                      {"seed", r.seed},
                      {"wall_time", r.wall_time},
                      {"steps", r.steps},
                      {"skipped_samples", r.skipped_samples},
                      {"initial_loss", r.initial_loss},
                      {"final_loss", r.final_loss}};
  return j.dump(2) + "\n";
}

}  // namespace ttune::pipeline
