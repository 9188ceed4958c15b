// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ttune/backbone/backbone.hpp"
#include "ttune/numerics/param_store.hpp"
#include "ttune/numerics/tape.hpp"
#include "ttune/pipeline/dataset.hpp"
#include "ttune/transducer/transducer.hpp"
#include "ttune/vectorizer/vectorizer.hpp"

namespace ttune::pipeline {

enum class ModeKind { None, FullFt, LinearAdapter, Lora, PromptTuning, Transducer, GveOnly, AbflOnly };

/// Adaptation method. `size` is the LoRA rank or the number of soft prompt
/// rows; other modes ignore it.
struct Mode {
  ModeKind kind = ModeKind::None;
  std::size_t size = 0;

  static Mode none() { return {}; }
  static Mode lora(std::size_t rank) { return {ModeKind::Lora, rank}; }
  static Mode prompt(std::size_t rows) { return {ModeKind::PromptTuning, rows}; }
  static Mode of(ModeKind kind) { return {kind, 0}; }

  /// Throws InvalidConfig for a LoRA rank outside {4, 8} or a prompt length
  /// outside {5, 10, 25, 50}.
  void validate() const;
  bool uses_graph() const noexcept;
  /// "lora" and "prompt_tuning" carry their size: "lora:4", "prompt_tuning:10".
  std::string label() const;

  friend bool operator==(const Mode&, const Mode&) = default;
};

std::string_view mode_kind_name(ModeKind kind) noexcept;
ModeKind parse_mode_kind(std::string_view name);
/// Accepts the forms produced by Mode::label(); a bare "lora" means rank 4 and
/// a bare "prompt_tuning" means 10 rows.
Mode parse_mode(std::string_view text);
std::vector<Mode> all_modes();

inline constexpr std::string_view kAdapterName = "adapter.w_a";
inline constexpr std::string_view kPromptName = "prompt.embeddings";

struct ModelConfig {
  Mode mode;
  backbone::BackboneConfig backbone;
  /// d_backbone is overwritten with backbone.d_model; gve_only and abfl_only
  /// override fusion/graph_input (see effective_transducer).
  transducer::TransducerConfig transducer;
  vec::VectorizerModel vectorizer;
  backbone::Vocab vocab;
  std::size_t max_nodes = 50;
};

/// The transducer variant a mode actually trains.
transducer::TransducerConfig effective_transducer(const ModelConfig& config);

/// A sample turned into model inputs once. `graph` is set for graph modes.
struct Prepared {
  std::vector<std::size_t> code_ids;
  std::vector<std::size_t> target_ids;  // ends with EOS
  std::optional<vec::GraphTensors> graph;
};

/// Frozen backbone plus whatever tensors the current mode owns, in one store.
class Session {
 public:
  Session(ModelConfig config, std::uint64_t seed);

  const ModelConfig& config() const noexcept { return config_; }
  const Mode& mode() const noexcept { return config_.mode; }
  std::uint64_t seed() const noexcept { return seed_; }
  ParamStore& store() noexcept { return store_; }
  const ParamStore& store() const noexcept { return store_; }
  const backbone::Backbone& backbone() const noexcept { return backbone_; }

  /// Names of the tensors owned by the mode (all backbone tensors for full_ft).
  std::vector<std::string> mode_param_names() const;
  std::size_t trainable_count() const { return store_.trainable_scalar_count(); }

  /// Parse/size errors propagate for graph modes.
  Prepared prepare(const Sample& sample) const;
  Prepared prepare_code(std::string_view code) const;

  /// Backbone embeddings after the mode's adaptation.
  Var adapt(Tape& tape, const Prepared& input);
  Var memory(Tape& tape, const Prepared& input);
  Var loss(Tape& tape, const Prepared& input);
  Matrix memory_values(const Prepared& input);
  std::vector<std::size_t> generate(const Prepared& input, std::size_t max_len, std::size_t beam);
  std::string predict(std::string_view code, std::size_t max_len, std::size_t beam);

  /// Replaces the mode-owned tensors (and the mode) with `params`. Shapes
  /// must match what `mode` would create against this backbone, else
  /// DimMismatch.
  void load_adapter(const Mode& mode, const transducer::TransducerConfig& transducer,
                    const std::map<std::string, Matrix>& params);
  /// Back to mode=none; full_ft restores the original backbone tensors.
  void remove_adapter();

  backbone::LoraOptions lora() const;

 private:
  void add_mode_params();

  ModelConfig config_;
  std::uint64_t seed_;
  backbone::Backbone backbone_;
  ParamStore store_;
};

struct ParamRow {
  std::string mode;
  std::size_t count = 0;
};

/// Trainable scalar count per mode for a backbone of width d_backbone.
std::vector<ParamRow> param_report(std::size_t d_backbone, std::size_t d_ff, std::size_t vocab_size,
                                   const transducer::TransducerConfig& transducer);

/// One-decimal thousands, e.g. 30744 -> "30.7K".
std::string format_thousands(std::size_t count);

}  // namespace ttune::pipeline
