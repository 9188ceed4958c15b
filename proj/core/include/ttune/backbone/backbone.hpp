// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ttune/backbone/vocab.hpp"
#include "ttune/numerics/param_store.hpp"
#include "ttune/numerics/random.hpp"
#include "ttune/numerics/tape.hpp"

namespace ttune::backbone {

struct BackboneConfig {
  std::size_t d_model = 64;
  std::size_t d_ff = 128;
  std::uint64_t seed = 1234;
  std::size_t max_context = 400;
  double rms_eps = 1e-6;
  /// Embedding rows have RMS norm ~embed_scale; the tied head divides by it.
  double embed_scale = 0.1;
  /// Value/output projections are I + projection_noise * Glorot.
  double projection_noise = 0.1;
  double ff_out_scale = 0.3;
};

inline constexpr std::string_view kPrefix = "backbone.";
inline constexpr std::string_view kLoraPrefix = "lora.";

/// The three attention blocks LoRA attaches to.
inline constexpr std::string_view kAttentionBlocks[] = {"enc.self", "dec.self", "dec.cross"};

/// Low-rank query/key deltas: W_q + A_q B_q and W_k + A_k B_k in every
/// attention block. rank 0 disables them.
struct LoraOptions {
  std::size_t rank = 0;
};

/// Tiny pre-norm encoder-decoder (one block each, single-head attention,
/// ReLU feed-forward, output head tied to the embedding table). Every tensor
/// is registered frozen and derived deterministically from (seed, dims);
/// embedding rows depend only on (seed, token string).
///
/// Weights are not trained. Query/key projections are random; value/output
/// projections start near the identity (negated for decoder self-attention)
/// so the frozen model copies what its memory points at instead of mapping
/// it through a random rotation. Positions are the sinusoid table scaled
/// by embed_scale / sqrt(d_model).
class Backbone {
 public:
  Backbone(BackboneConfig config, Vocab vocab);

  const BackboneConfig& config() const noexcept { return config_; }
  const Vocab& vocab() const noexcept { return vocab_; }

  void add_params(ParamStore& store) const;
  /// Number of scalars add_params registers, from the shape table alone.
  static std::size_t param_count(std::size_t vocab_size, std::size_t d_model, std::size_t d_ff);

  static void add_lora_params(ParamStore& store, std::size_t d_model, std::size_t rank, std::uint64_t seed);
  static std::size_t lora_param_count(std::size_t d_model, std::size_t rank);

  /// C_init: embedding rows plus sinusoidal positions. Throws ContextTooLong
  /// beyond max_context.
  Var embed(Tape& tape, ParamStore& store, std::span<const std::size_t> ids) const;

  Var encode(Tape& tape, ParamStore& store, Var input, const LoraOptions& lora = {}) const;

  /// Next-token logits for every prefix position (rows = prefix length).
  Var decoder_logits(Tape& tape, ParamStore& store, Var memory, std::span<const std::size_t> prefix,
                     const LoraOptions& lora = {}) const;

  /// Teacher-forced mean token cross-entropy; `target` must end with EOS.
  Var decode_loss(Tape& tape, ParamStore& store, Var memory, std::span<const std::size_t> target,
                  const LoraOptions& lora = {}) const;

  /// Beam search (beam = 1 is greedy) over the frozen decoder. Output
  /// excludes BOS and EOS.
  std::vector<std::size_t> generate(ParamStore& store, const Matrix& memory, std::size_t max_len, std::size_t beam,
                                    const LoraOptions& lora = {}) const;

  /// Unit-amplitude sinusoid table.
  static Matrix positions(std::size_t length, std::size_t d_model);
  Matrix scaled_positions(std::size_t length) const;

 private:
  Var attention(Tape& tape, ParamStore& store, std::string_view block, Var query_in, Var kv_in, bool causal,
                const LoraOptions& lora) const;
  Var feed_forward(Tape& tape, ParamStore& store, std::string_view block, Var x) const;
  Var norm(Tape& tape, ParamStore& store, std::string_view gain, Var x) const;
  Matrix init_tensor(const std::string& name, std::size_t rows, std::size_t cols, bool gain, Rng& rng) const;

  BackboneConfig config_;
  Vocab vocab_;
};

}  // namespace ttune::backbone
