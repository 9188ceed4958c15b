// SPDX-License-Identifier: Apache-2.0
#include "ttune/pipeline/checkpoint.hpp"

#include <json.hpp>

#include "ttune/error.hpp"

namespace ttune::pipeline {

using nlohmann::json;

namespace {

[[noreturn]] void schema(const std::string& path, const std::string& what) {
  fail(ErrorKind::SchemaError, path + ": " + what);
}

const json& field(const json& obj, const std::string& path, const char* key) {
  if (!obj.is_object()) schema(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) schema(path + "." + key, "missing");
  return *it;
}

template <class T>
T get(const json& obj, const std::string& path, const char* key) {
  const json& v = field(obj, path, key);
  const std::string p = path + "." + key;
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) schema(p, "expected a boolean");
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) schema(p, "expected a string");
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) schema(p, "expected a number");
  } else {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      schema(p, "expected a non-negative integer");
    }
  }
  return v.get<T>();
}

std::string_view fusion_name(transducer::Fusion f) { return f == transducer::Fusion::Sum ? "sum" : "abfl"; }
std::string_view axis_name(transducer::SoftmaxAxis a) {
  return a == transducer::SoftmaxAxis::Keys ? "keys" : "tokens";
}
std::string_view input_name(transducer::GraphInput g) {
  return g == transducer::GraphInput::FreeVector ? "free_vector" : "gve";
}

template <class E>
E pick(const std::string& value, const std::string& path, std::initializer_list<std::pair<const char*, E>> options) {
  for (auto& [n, e] : options)
    if (value == n) return e;
  schema(path, "unexpected value '" + value + "'");
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    rows.push_back(json(std::vector<double>(row.begin(), row.end())));
  }
  return rows;
}

Matrix matrix_from(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) schema(path, "expected a non-empty array of rows");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  std::vector<double> values;
  for (std::size_t r = 0; r < rows; ++r) {
    const json& row = j[r];
    const std::string rp = path + "[" + std::to_string(r) + "]";
    if (!row.is_array() || row.empty()) schema(rp, "expected a non-empty array");
    if (r == 0) cols = row.size();
    if (row.size() != cols) schema(rp, "ragged row");
    for (const json& v : row) {
      if (!v.is_number()) schema(rp, "expected numbers");
      values.push_back(v.get<double>());
    }
  }
  try {
    return Matrix(rows, cols, std::move(values));
  } catch (const Error& e) {
    schema(path, e.what());
  }
}

json config_json(const ModelConfig& c) {
  const auto& b = c.backbone;
  const auto& t = c.transducer;
  const auto& v = c.vectorizer;
  json idf = json::object();
  for (const auto& [tok, w] : v.idf) idf[tok] = w;
  json external = json::object();
  for (const auto& [label, vec] : v.external_table) external[label] = vec;
  return {
      {"mode_size", c.mode.size},
      {"max_nodes", c.max_nodes},
      {"backbone",
       {{"d_model", b.d_model}, {"d_ff", b.d_ff}, {"seed", b.seed}, {"max_context", b.max_context},
        {"rms_eps", b.rms_eps}, {"embed_scale", b.embed_scale}, {"projection_noise", b.projection_noise},
        {"ff_out_scale", b.ff_out_scale}}},
      {"transducer",
       {{"d_init", t.d_init},
        {"d_down", t.d_down},
        {"d_up", t.d_up},
        {"d_abf", t.d_abf},
        {"d_backbone", t.d_backbone},
        {"leaky_slope", t.leaky_slope},
        {"fusion", fusion_name(t.fusion)},
        {"softmax_axis", axis_name(t.softmax_axis)},
        {"graph_input", input_name(t.graph_input)},
        {"residual", t.residual},
        {"rms_eps", t.rms_eps}}},
      {"vectorizer",
       {{"mode", vec::mode_name(v.mode)},
        {"d_init", v.d_init},
        {"idf", idf},
        {"unseen_idf", v.unseen_idf},
        {"external", external}}},
      {"vocab", c.vocab.tokens()},
  };
}

ModelConfig config_from(const json& j, ModeKind kind, const std::string& path) {
  ModelConfig c;
  c.mode = {kind, get<std::size_t>(j, path, "mode_size")};
  try {
    c.mode.validate();
  } catch (const Error& e) {
    schema(path + ".mode_size", e.what());
  }
  c.max_nodes = get<std::size_t>(j, path, "max_nodes");

  const std::string bp = path + ".backbone";
  const json& b = field(j, path, "backbone");
  c.backbone.d_model = get<std::size_t>(b, bp, "d_model");
  c.backbone.d_ff = get<std::size_t>(b, bp, "d_ff");
  c.backbone.seed = get<std::uint64_t>(b, bp, "seed");
  c.backbone.max_context = get<std::size_t>(b, bp, "max_context");
  c.backbone.rms_eps = get<double>(b, bp, "rms_eps");
  c.backbone.embed_scale = get<double>(b, bp, "embed_scale");
  c.backbone.projection_noise = get<double>(b, bp, "projection_noise");
  c.backbone.ff_out_scale = get<double>(b, bp, "ff_out_scale");

  const std::string tp = path + ".transducer";
  const json& t = field(j, path, "transducer");
  auto& tc = c.transducer;
  tc.d_init = get<std::size_t>(t, tp, "d_init");
  tc.d_down = get<std::size_t>(t, tp, "d_down");
  tc.d_up = get<std::size_t>(t, tp, "d_up");
  tc.d_abf = get<std::size_t>(t, tp, "d_abf");
  tc.d_backbone = get<std::size_t>(t, tp, "d_backbone");
  tc.leaky_slope = get<double>(t, tp, "leaky_slope");
  tc.fusion = pick<transducer::Fusion>(get<std::string>(t, tp, "fusion"), tp + ".fusion",
                                       {{"abfl", transducer::Fusion::Abfl}, {"sum", transducer::Fusion::Sum}});
  tc.softmax_axis = pick<transducer::SoftmaxAxis>(
      get<std::string>(t, tp, "softmax_axis"), tp + ".softmax_axis",
      {{"tokens", transducer::SoftmaxAxis::Tokens}, {"keys", transducer::SoftmaxAxis::Keys}});
  tc.graph_input = pick<transducer::GraphInput>(
      get<std::string>(t, tp, "graph_input"), tp + ".graph_input",
      {{"gve", transducer::GraphInput::Gve}, {"free_vector", transducer::GraphInput::FreeVector}});
  tc.residual = get<bool>(t, tp, "residual");
  tc.rms_eps = get<double>(t, tp, "rms_eps");

  const std::string vp = path + ".vectorizer";
  const json& v = field(j, path, "vectorizer");
  auto& vm = c.vectorizer;
  vm.mode = pick<vec::VectorizerMode>(get<std::string>(v, vp, "mode"), vp + ".mode",
                                      {{"binary", vec::VectorizerMode::Binary},
                                       {"tfidf", vec::VectorizerMode::Tfidf},
                                       {"external", vec::VectorizerMode::External}});
  vm.d_init = get<std::size_t>(v, vp, "d_init");
  vm.unseen_idf = get<double>(v, vp, "unseen_idf");
  const json& idf = field(v, vp, "idf");
  if (!idf.is_object()) schema(vp + ".idf", "expected an object");
  for (auto it = idf.begin(); it != idf.end(); ++it) {
    if (!it->is_number()) schema(vp + ".idf." + it.key(), "expected a number");
    vm.idf[it.key()] = it->get<double>();
  }
  const json& ext = field(v, vp, "external");
  if (!ext.is_object()) schema(vp + ".external", "expected an object");
  for (auto it = ext.begin(); it != ext.end(); ++it) {
    const std::string ep = vp + ".external." + it.key();
    if (!it->is_array() || it->size() != vm.d_init) schema(ep, "expected d_init numbers");
    for (const json& x : *it)
      if (!x.is_number()) schema(ep, "expected numbers");
    vm.external_table[it.key()] = it->get<std::vector<double>>();
  }

  const json& vocab = field(j, path, "vocab");
  if (!vocab.is_array()) schema(path + ".vocab", "expected an array");
  std::vector<std::string> tokens;
  for (const json& tok : vocab) {
    if (!tok.is_string()) schema(path + ".vocab", "expected strings");
    tokens.push_back(tok.get<std::string>());
  }
  const backbone::Vocab defaults;
  if (tokens.size() < defaults.size() ||
      !std::equal(defaults.tokens().begin(), defaults.tokens().end(), tokens.begin())) {
    schema(path + ".vocab", "must start with the special tokens");
  }
  c.vocab = backbone::Vocab(std::vector<std::string>(tokens.begin() + static_cast<long>(defaults.size()), tokens.end()));
  return c;
}

json parse_json(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::SchemaError, std::string("$: invalid JSON: ") + e.what());
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (batch == 0) fail(ErrorKind::InvalidConfig, "batch must be >= 1");
  if (eval_batch == 0) fail(ErrorKind::InvalidConfig, "eval_batch must be >= 1");
  if (!(lr >= 0.0)) fail(ErrorKind::InvalidConfig, "lr must be >= 0");
  if (!(max_grad_norm > 0.0)) fail(ErrorKind::InvalidConfig, "max_grad_norm must be > 0");
}

Checkpoint make_checkpoint(const Session& session, const TrainConfig& train) {
  Checkpoint ck;
  ck.config = session.config();
  ck.train = train;
  ck.train.seed = session.seed();
  for (const auto& n : session.mode_param_names()) ck.params.emplace(n, session.store().value(n));
  return ck;
}

Session restore_session(const Checkpoint& checkpoint) {
  ModelConfig base = checkpoint.config;
  base.mode = Mode::none();
  Session session(base, checkpoint.train.seed);
  session.load_adapter(checkpoint.config.mode, checkpoint.config.transducer, checkpoint.params);
  return session;
}

std::string checkpoint_to_json(const Checkpoint& ck) {
  json params = json::object();
  for (const auto& [name, m] : ck.params) params[name] = matrix_json(m);
  json train = {{"epochs", ck.train.epochs},         {"batch", ck.train.batch},
                {"lr", ck.train.lr},                 {"max_grad_norm", ck.train.max_grad_norm},
                {"eval_batch", ck.train.eval_batch}, {"max_steps", ck.train.max_steps},
                {"weight_decay", ck.train.weight_decay}};
  json config = config_json(ck.config);
  config["train"] = std::move(train);
  json doc = {{"format_version", kCheckpointVersion},
              {"mode", mode_kind_name(ck.config.mode.kind)},
              {"config", std::move(config)},
              {"seed", ck.train.seed},
              {"params", std::move(params)}};
  return doc.dump() + "\n";
}

Checkpoint checkpoint_from_json(std::string_view text) {
  const json doc = parse_json(text);
  if (!doc.is_object()) schema("$", "expected an object");
  const json& version = field(doc, "$", "format_version");
  if (!version.is_number_integer()) schema("$.format_version", "expected an integer");
  if (version.get<long long>() != kCheckpointVersion) {
    fail(ErrorKind::VersionMismatch, "checkpoint format_version " + version.dump() + ", this build reads " +
                                         std::to_string(kCheckpointVersion));
  }
  Checkpoint ck;
  ModeKind kind;
  try {
    kind = parse_mode_kind(get<std::string>(doc, "$", "mode"));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::SchemaError) throw;
    schema("$.mode", e.what());
  }
  const json& config = field(doc, "$", "config");
  ck.config = config_from(config, kind, "$.config");
  const json& train = field(config, "$.config", "train");
  const std::string tp = "$.config.train";
  ck.train.epochs = get<std::size_t>(train, tp, "epochs");
  ck.train.batch = get<std::size_t>(train, tp, "batch");
  ck.train.lr = get<double>(train, tp, "lr");
  ck.train.max_grad_norm = get<double>(train, tp, "max_grad_norm");
  ck.train.eval_batch = get<std::size_t>(train, tp, "eval_batch");
  ck.train.max_steps = get<std::size_t>(train, tp, "max_steps");
  ck.train.weight_decay = get<double>(train, tp, "weight_decay");
  ck.train.seed = get<std::uint64_t>(doc, "$", "seed");
  const json& params = field(doc, "$", "params");
  if (!params.is_object()) schema("$.params", "expected an object");
  for (auto it = params.begin(); it != params.end(); ++it) {
    ck.params.emplace(it.key(), matrix_from(*it, "$.params." + it.key()));
  }
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& checkpoint) {
  write_file_atomic(path, checkpoint_to_json(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return checkpoint_from_json(read_file(path)); }

std::string model_config_to_json(const ModelConfig& config) {
  json j = config_json(config);
  j["mode"] = mode_kind_name(config.mode.kind);
  return j.dump(2) + "\n";
}

ModelConfig model_config_from_json(std::string_view text) {
  const json j = parse_json(text);
  ModeKind kind;
  try {
    kind = parse_mode_kind(get<std::string>(j, "$", "mode"));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::SchemaError) throw;
    schema("$.mode", e.what());
  }
  return config_from(j, kind, "$");
}

}  // namespace ttune::pipeline
