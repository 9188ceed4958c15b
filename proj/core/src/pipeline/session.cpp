// SPDX-License-Identifier: Apache-2.0
#include "ttune/pipeline/session.hpp"

#include <cmath>
#include <cstdio>

#include "ttune/cpg/cpg.hpp"
#include "ttune/error.hpp"
#include "ttune/numerics/ops.hpp"
#include "ttune/numerics/random.hpp"
#include "ttune/text/tokenize.hpp"

namespace ttune::pipeline {

namespace {

constexpr std::pair<ModeKind, std::string_view> kModeNames[] = {
    {ModeKind::None, "none"},
    {ModeKind::FullFt, "full_ft"},
    {ModeKind::LinearAdapter, "linear_adapter"},
    {ModeKind::Lora, "lora"},
    {ModeKind::PromptTuning, "prompt_tuning"},
    {ModeKind::Transducer, "transducer"},
    {ModeKind::GveOnly, "gve_only"},
    {ModeKind::AbflOnly, "abfl_only"},
};

}  // namespace

std::string_view mode_kind_name(ModeKind kind) noexcept {
  for (auto [k, n] : kModeNames)
    if (k == kind) return n;
  return "none";
}

ModeKind parse_mode_kind(std::string_view name) {
  for (auto [k, n] : kModeNames)
    if (n == name) return k;
  fail(ErrorKind::InvalidConfig, "unknown mode '" + std::string(name) + "'");
}

void Mode::validate() const {
  if (kind == ModeKind::Lora && size != 4 && size != 8) {
    fail(ErrorKind::InvalidConfig, "lora rank must be 4 or 8, got " + std::to_string(size));
  }
  if (kind == ModeKind::PromptTuning && size != 5 && size != 10 && size != 25 && size != 50) {
    fail(ErrorKind::InvalidConfig, "prompt length must be one of 5, 10, 25, 50, got " + std::to_string(size));
  }
}

bool Mode::uses_graph() const noexcept { return kind == ModeKind::Transducer || kind == ModeKind::GveOnly; }

std::string Mode::label() const {
  std::string out(mode_kind_name(kind));
  if (kind == ModeKind::Lora || kind == ModeKind::PromptTuning) out += ":" + std::to_string(size);
  return out;
}

Mode parse_mode(std::string_view text) {
  const auto colon = text.find(':');
  Mode mode{parse_mode_kind(text.substr(0, colon)), 0};
  if (colon != std::string_view::npos) {
    const std::string digits(text.substr(colon + 1));
    if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos) {
      fail(ErrorKind::InvalidConfig, "bad mode size in '" + std::string(text) + "'");
    }
    if (mode.kind != ModeKind::Lora && mode.kind != ModeKind::PromptTuning) {
      fail(ErrorKind::InvalidConfig, "mode '" + std::string(mode_kind_name(mode.kind)) + "' takes no size");
    }
    mode.size = std::stoul(digits);
  } else if (mode.kind == ModeKind::Lora) {
    mode.size = 4;
  } else if (mode.kind == ModeKind::PromptTuning) {
    mode.size = 10;
  }
  mode.validate();
  return mode;
}

std::vector<Mode> all_modes() {
  return {Mode::none(),
          Mode::of(ModeKind::FullFt),
          Mode::of(ModeKind::LinearAdapter),
          Mode::lora(4),
          Mode::lora(8),
          Mode::prompt(5),
          Mode::prompt(10),
          Mode::prompt(25),
          Mode::prompt(50),
          Mode::of(ModeKind::Transducer),
          Mode::of(ModeKind::GveOnly),
          Mode::of(ModeKind::AbflOnly)};
}

transducer::TransducerConfig effective_transducer(const ModelConfig& config) {
  transducer::TransducerConfig t = config.transducer;
  t.d_backbone = config.backbone.d_model;
  if (config.mode.kind == ModeKind::GveOnly) {
    t.fusion = transducer::Fusion::Sum;
    t.graph_input = transducer::GraphInput::Gve;
    t.d_up = t.d_backbone;
  } else if (config.mode.kind == ModeKind::AbflOnly) {
    t.fusion = transducer::Fusion::Abfl;
    t.graph_input = transducer::GraphInput::FreeVector;
  }
  return t;
}

Session::Session(ModelConfig config, std::uint64_t seed)
    : config_(std::move(config)), seed_(seed), backbone_(config_.backbone, config_.vocab) {
  config_.mode.validate();
  config_.transducer.d_backbone = config_.backbone.d_model;
  if (config_.transducer.d_init != config_.vectorizer.d_init) {
    fail(ErrorKind::DimMismatch, "vectorizer width " + std::to_string(config_.vectorizer.d_init) +
                                     " != transducer d_init " + std::to_string(config_.transducer.d_init));
  }
  backbone_.add_params(store_);
  add_mode_params();
}

void Session::add_mode_params() {
  const std::size_t d = config_.backbone.d_model;
  switch (config_.mode.kind) {
    case ModeKind::None:
      break;
    case ModeKind::FullFt:
      for (const auto& n : store_.names_with_prefix(std::string(backbone::kPrefix))) store_.unfreeze(n);
      break;
    case ModeKind::LinearAdapter:
      store_.add(std::string(kAdapterName), Matrix::identity(d));
      break;
    case ModeKind::Lora:
      backbone::Backbone::add_lora_params(store_, d, config_.mode.size, seed_);
      break;
    case ModeKind::PromptTuning: {
      Rng rng(splitmix64(seed_ ^ fnv1a64(kPromptName)));
      const double limit = config_.backbone.embed_scale * std::sqrt(3.0 / static_cast<double>(d));
      store_.add(std::string(kPromptName), uniform_matrix(config_.mode.size, d, -limit, limit, rng));
      break;
    }
    case ModeKind::Transducer:
    case ModeKind::GveOnly:
    case ModeKind::AbflOnly:
      transducer::init_params(store_, effective_transducer(config_), seed_);
      break;
  }
}

std::vector<std::string> Session::mode_param_names() const {
  switch (config_.mode.kind) {
    case ModeKind::None:
      return {};
    case ModeKind::FullFt:
      return store_.names_with_prefix(std::string(backbone::kPrefix));
    case ModeKind::LinearAdapter:
      return {std::string(kAdapterName)};
    case ModeKind::Lora:
      return store_.names_with_prefix(std::string(backbone::kLoraPrefix));
    case ModeKind::PromptTuning:
      return {std::string(kPromptName)};
    default:
      return store_.names_with_prefix(std::string(transducer::kPrefix));
  }
}

backbone::LoraOptions Session::lora() const {
  return {config_.mode.kind == ModeKind::Lora ? config_.mode.size : 0};
}

Prepared Session::prepare_code(std::string_view code) const {
  Prepared p;
  p.code_ids = config_.vocab.encode(code);
  if (config_.mode.uses_graph()) {
    const cpg::Cpg graph = cpg::build_cpg(code, config_.max_nodes);
    p.graph = vec::vectorize_graph(config_.vectorizer, graph);
  }
  return p;
}

Prepared Session::prepare(const Sample& sample) const {
  Prepared p = prepare_code(sample.code);
  p.target_ids = config_.vocab.encode(sample.target);
  p.target_ids.push_back(backbone::kEos);
  return p;
}

Var Session::adapt(Tape& tape, const Prepared& input) {
  Var c_init = backbone_.embed(tape, store_, input.code_ids);
  switch (config_.mode.kind) {
    case ModeKind::LinearAdapter:
      return ops::matmul(c_init, tape.parameter(store_, std::string(kAdapterName)));
    case ModeKind::PromptTuning:
      return ops::concat_rows(tape.parameter(store_, std::string(kPromptName)), c_init);
    case ModeKind::Transducer:
    case ModeKind::GveOnly:
    case ModeKind::AbflOnly: {
      const auto t = effective_transducer(config_);
      const transducer::Bound bound = transducer::bind(tape, store_, t);
      return transducer::fuse(tape, c_init, input.graph ? &*input.graph : nullptr, bound, t);
    }
    default:
      return c_init;
  }
}

Var Session::memory(Tape& tape, const Prepared& input) {
  return backbone_.encode(tape, store_, adapt(tape, input), lora());
}

Var Session::loss(Tape& tape, const Prepared& input) {
  return backbone_.decode_loss(tape, store_, memory(tape, input), input.target_ids, lora());
}

Matrix Session::memory_values(const Prepared& input) {
  Tape tape(false);
  return memory(tape, input).value();
}

std::vector<std::size_t> Session::generate(const Prepared& input, std::size_t max_len, std::size_t beam) {
  return backbone_.generate(store_, memory_values(input), max_len, beam, lora());
}

std::string Session::predict(std::string_view code, std::size_t max_len, std::size_t beam) {
  return config_.vocab.decode(generate(prepare_code(code), max_len, beam));
}

void Session::load_adapter(const Mode& mode, const transducer::TransducerConfig& transducer,
                           const std::map<std::string, Matrix>& params) {
  mode.validate();
  ModelConfig next = config_;
  next.mode = mode;
  next.transducer = transducer;
  next.transducer.d_backbone = config_.backbone.d_model;

  // Shapes the mode would create against this backbone.
  ParamStore expected;
  {
    Session probe(next, seed_);
    for (const auto& n : probe.mode_param_names()) expected.add(n, probe.store().value(n));
  }
  if (expected.size() != params.size()) {
    fail(ErrorKind::DimMismatch, "adapter has " + std::to_string(params.size()) + " tensors, mode " + mode.label() +
                                     " expects " + std::to_string(expected.size()));
  }
  for (const auto& [name, p] : expected) {
    auto it = params.find(name);
    if (it == params.end()) fail(ErrorKind::DimMismatch, "adapter is missing tensor " + name);
    if (it->second.rows() != p.value.rows() || it->second.cols() != p.value.cols()) {
      fail(ErrorKind::DimMismatch, name + " is " + it->second.shape_string() + ", expected " + p.value.shape_string());
    }
  }

  remove_adapter();
  config_ = std::move(next);
  add_mode_params();
  for (const auto& [name, m] : params) store_.at(name).value = m;
}

void Session::remove_adapter() {
  if (config_.mode.kind == ModeKind::FullFt) {
    store_.erase_prefix(std::string(backbone::kPrefix));
    backbone_.add_params(store_);
  } else {
    for (const auto& n : mode_param_names()) store_.erase_prefix(n);
  }
  config_.mode = Mode::none();
}

std::vector<ParamRow> param_report(std::size_t d_backbone, std::size_t d_ff, std::size_t vocab_size,
                                   const transducer::TransducerConfig& transducer) {
  ModelConfig base;
  base.backbone.d_model = d_backbone;
  base.backbone.d_ff = d_ff;
  base.transducer = transducer;
  std::vector<ParamRow> rows;
  for (const Mode& m : all_modes()) {
    std::size_t n = 0;
    switch (m.kind) {
      case ModeKind::None:
        break;
      case ModeKind::FullFt:
        n = backbone::Backbone::param_count(vocab_size, d_backbone, d_ff);
        break;
      case ModeKind::LinearAdapter:
        n = d_backbone * d_backbone;
        break;
      case ModeKind::Lora:
        n = backbone::Backbone::lora_param_count(d_backbone, m.size);
        break;
      case ModeKind::PromptTuning:
        n = m.size * d_backbone;
        break;
      default: {
        ModelConfig c = base;
        c.mode = m;
        n = transducer::count_trainable(effective_transducer(c));
      }
    }
    rows.push_back({m.label(), n});
  }
  return rows;
}

std::string format_thousands(std::size_t count) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.1fK", static_cast<double>(count) / 1000.0);
  return buf;
}

}  // namespace ttune::pipeline
