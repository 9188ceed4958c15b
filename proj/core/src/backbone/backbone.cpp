// SPDX-License-Identifier: Apache-2.0
#include "ttune/backbone/backbone.hpp"

#include <cmath>

#include "ttune/backbone/beam_search.hpp"
#include "ttune/error.hpp"
#include "ttune/numerics/ops.hpp"
#include "ttune/numerics/random.hpp"
#include "ttune/text/tokenize.hpp"

namespace ttune::backbone {
namespace {

std::string bb(std::string_view suffix) { return std::string(kPrefix) + std::string(suffix); }
std::string lora_name(std::string_view block, char proj, char part) {
  return std::string(kLoraPrefix) + std::string(block) + "." + proj + "." + part;
}

Rng rng_for(std::uint64_t seed, std::string_view key) { return Rng(splitmix64(seed ^ fnv1a64(key))); }

struct Shape {
  std::string name;
  std::size_t rows, cols;
  bool gain;
};

std::vector<Shape> block_shapes(std::size_t d, std::size_t d_ff) {
  std::vector<Shape> s;
  auto attn = [&](const std::string& block) {
    for (const char* w : {"wq", "wk", "wv", "wo"}) s.push_back({block + "." + w, d, d, false});
  };
  s.push_back({"enc.norm1", 1, d, true});
  attn("enc.self");
  s.push_back({"enc.norm2", 1, d, true});
  s.push_back({"enc.ff.w1", d, d_ff, false});
  s.push_back({"enc.ff.w2", d_ff, d, false});
  s.push_back({"enc.norm_out", 1, d, true});
  s.push_back({"dec.norm1", 1, d, true});
  attn("dec.self");
  s.push_back({"dec.norm2", 1, d, true});
  attn("dec.cross");
  s.push_back({"dec.norm3", 1, d, true});
  s.push_back({"dec.ff.w1", d, d_ff, false});
  s.push_back({"dec.ff.w2", d_ff, d, false});
  s.push_back({"dec.norm_out", 1, d, true});
  return s;
}

}  // namespace

Backbone::Backbone(BackboneConfig config, Vocab vocab) : config_(config), vocab_(std::move(vocab)) {
  if (config_.d_model == 0 || config_.d_ff == 0) fail(ErrorKind::InvalidConfig, "backbone dimensions must be >= 1");
  if (!(config_.embed_scale > 0.0)) fail(ErrorKind::InvalidConfig, "embed_scale must be > 0");
}

void Backbone::add_params(ParamStore& store) const {
  const std::size_t d = config_.d_model;
  const double limit = config_.embed_scale * std::sqrt(3.0 / static_cast<double>(d));
  Matrix table(vocab_.size(), d);
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    Rng rng = rng_for(config_.seed, "embed:" + vocab_.token(i));
    for (double& v : table.row(i)) v = rng.uniform(-limit, limit);
  }
  store.add(bb("embed"), std::move(table), true);
  for (const auto& s : block_shapes(d, config_.d_ff)) {
    Rng rng = rng_for(config_.seed, s.name);
    store.add(bb(s.name), init_tensor(s.name, s.rows, s.cols, s.gain, rng), true);
  }
}

std::size_t Backbone::param_count(std::size_t vocab_size, std::size_t d_model, std::size_t d_ff) {
  std::size_t n = vocab_size * d_model;
  for (const auto& s : block_shapes(d_model, d_ff)) n += s.rows * s.cols;
  return n;
}

void Backbone::add_lora_params(ParamStore& store, std::size_t d_model, std::size_t rank, std::uint64_t seed) {
  for (std::string_view block : kAttentionBlocks) {
    for (char proj : {'q', 'k'}) {
      Rng rng = rng_for(seed, lora_name(block, proj, 'a'));
      store.add(lora_name(block, proj, 'a'), glorot_uniform(d_model, rank, rng));
      store.add(lora_name(block, proj, 'b'), Matrix::zeros(rank, d_model));
    }
  }
}

std::size_t Backbone::lora_param_count(std::size_t d_model, std::size_t rank) {
  return std::size(kAttentionBlocks) * 2 * (2 * d_model * rank);
}

Matrix Backbone::scaled_positions(std::size_t length) const {
  Matrix pe = positions(length, config_.d_model);
  const double s = config_.embed_scale / std::sqrt(static_cast<double>(config_.d_model));
  for (double& v : pe.values()) v *= s;
  return pe;
}

Matrix Backbone::init_tensor(const std::string& name, std::size_t rows, std::size_t cols, bool gain, Rng& rng) const {
  if (gain) return Matrix::filled(1, cols, 1.0);
  Matrix m = glorot_uniform(rows, cols, rng);
  if (name.ends_with(".wv") || name.ends_with(".wo")) {
    // Near-identity value path; the decoder's own history is subtracted so
    // the tied head does not keep re-emitting the previous token.
    const double sign = name == "dec.self.wo" ? -1.0 : 1.0;
    for (double& v : m.values()) v *= config_.projection_noise;
    for (std::size_t i = 0; i < rows; ++i) m(i, i) += 1.0;
    for (double& v : m.values()) v *= sign;
  } else if (name.ends_with("ff.w2")) {
    for (double& v : m.values()) v *= config_.ff_out_scale;
  }
  return m;
}

Matrix Backbone::positions(std::size_t length, std::size_t d_model) {
  Matrix pe(length, d_model);
  for (std::size_t pos = 0; pos < length; ++pos) {
    for (std::size_t i = 0; i < d_model; ++i) {
      const double exponent = static_cast<double>(2 * (i / 2)) / static_cast<double>(d_model);
      const double angle = static_cast<double>(pos) / std::pow(10000.0, exponent);
      pe(pos, i) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

Var Backbone::embed(Tape& tape, ParamStore& store, std::span<const std::size_t> ids) const {
  if (ids.size() > config_.max_context) {
    fail(ErrorKind::ContextTooLong, std::to_string(ids.size()) + " tokens exceed the context of " +
                                        std::to_string(config_.max_context));
  }
  if (ids.empty()) fail(ErrorKind::EmptyInput, "cannot embed an empty token sequence");
  Var rows = ops::gather_rows(tape.parameter(store, bb("embed")), ids);
  return ops::add(rows, tape.constant(scaled_positions(ids.size())));
}

Var Backbone::norm(Tape& tape, ParamStore& store, std::string_view gain, Var x) const {
  return ops::rms_norm_rows(x, tape.parameter(store, bb(gain)), config_.rms_eps);
}

Var Backbone::attention(Tape& tape, ParamStore& store, std::string_view block, Var query_in, Var kv_in, bool causal,
                        const LoraOptions& lora) const {
  const std::string b(block);
  auto w = [&](const char* n) { return tape.parameter(store, bb(b + "." + n)); };
  Var q = ops::matmul(query_in, w("wq"));
  Var k = ops::matmul(kv_in, w("wk"));
  if (lora.rank > 0) {
    auto delta = [&](Var in, char proj) {
      return ops::matmul(ops::matmul(in, tape.parameter(store, lora_name(block, proj, 'a'))),
                         tape.parameter(store, lora_name(block, proj, 'b')));
    };
    q = ops::add(q, delta(query_in, 'q'));
    k = ops::add(k, delta(kv_in, 'k'));
  }
  Var v = ops::matmul(kv_in, w("wv"));
  const double scale = 1.0 / std::sqrt(static_cast<double>(config_.d_model));
  Var weights = ops::softmax_rows(ops::scale(ops::matmul(q, ops::transpose(k)), scale), causal);
  return ops::matmul(ops::matmul(weights, v), w("wo"));
}

Var Backbone::feed_forward(Tape& tape, ParamStore& store, std::string_view block, Var x) const {
  const std::string b(block);
  Var hidden = ops::leaky_relu(ops::matmul(x, tape.parameter(store, bb(b + ".ff.w1"))), 0.0);
  return ops::matmul(hidden, tape.parameter(store, bb(b + ".ff.w2")));
}

Var Backbone::encode(Tape& tape, ParamStore& store, Var input, const LoraOptions& lora) const {
  if (input.cols() != config_.d_model) {
    fail(ErrorKind::ShapeMismatch, "encoder input " + input.value().shape_string() + " for d_model " +
                                       std::to_string(config_.d_model));
  }
  Var normed = norm(tape, store, "enc.norm1", input);
  Var h = ops::add(input, attention(tape, store, "enc.self", normed, normed, false, lora));
  Var out = ops::add(h, feed_forward(tape, store, "enc", norm(tape, store, "enc.norm2", h)));
  return norm(tape, store, "enc.norm_out", out);
}

Var Backbone::decoder_logits(Tape& tape, ParamStore& store, Var memory, std::span<const std::size_t> prefix,
                             const LoraOptions& lora) const {
  Var table = tape.parameter(store, bb("embed"));
  Var y = ops::add(ops::gather_rows(table, prefix), tape.constant(scaled_positions(prefix.size())));
  Var n1 = norm(tape, store, "dec.norm1", y);
  Var h1 = ops::add(y, attention(tape, store, "dec.self", n1, n1, true, lora));
  Var h2 = ops::add(h1, attention(tape, store, "dec.cross", norm(tape, store, "dec.norm2", h1), memory, false, lora));
  Var h3 = ops::add(h2, feed_forward(tape, store, "dec", norm(tape, store, "dec.norm3", h2)));
  Var out = norm(tape, store, "dec.norm_out", h3);
  return ops::scale(ops::matmul(out, ops::transpose(table)), 1.0 / config_.embed_scale);
}

Var Backbone::decode_loss(Tape& tape, ParamStore& store, Var memory, std::span<const std::size_t> target,
                          const LoraOptions& lora) const {
  if (target.empty()) fail(ErrorKind::EmptyTarget, "target sequence is empty");
  if (target.back() != kEos) fail(ErrorKind::EmptyTarget, "target must end with EOS");
  std::vector<std::size_t> prefix{kBos};
  prefix.insert(prefix.end(), target.begin(), target.end() - 1);
  Var logits = decoder_logits(tape, store, memory, prefix, lora);
  return ops::cross_entropy(logits, target);
}

std::vector<std::size_t> Backbone::generate(ParamStore& store, const Matrix& memory, std::size_t max_len,
                                            std::size_t beam, const LoraOptions& lora) const {
  NextLogProbs next = [&](const std::vector<std::size_t>& generated) {
    Tape tape(false);
    std::vector<std::size_t> prefix{kBos};
    prefix.insert(prefix.end(), generated.begin(), generated.end());
    Var logits = decoder_logits(tape, store, tape.constant(memory), prefix, lora);
    const auto last = logits.value().row(prefix.size() - 1);
    double peak = last[0];
    for (double v : last) peak = std::max(peak, v);
    double z = 0.0;
    for (double v : last) z += std::exp(v - peak);
    const double log_z = std::log(z) + peak;
    std::vector<double> out(last.size());
    for (std::size_t i = 0; i < last.size(); ++i) out[i] = last[i] - log_z;
    return out;
  };
  return beam_search(next, kEos, max_len, beam).tokens;
}

}  // namespace ttune::backbone
