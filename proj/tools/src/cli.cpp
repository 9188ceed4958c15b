// SPDX-License-Identifier: Apache-2.0
#include "ttune/cli/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <ostream>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "ttune/cpg/cpg.hpp"
#include "ttune/data/dedup.hpp"
#include "ttune/data/stats.hpp"
#include "ttune/data/synth.hpp"
#include "ttune/error.hpp"
#include "ttune/numerics/random.hpp"
#include "ttune/pipeline/checkpoint.hpp"
#include "ttune/pipeline/gradcheck.hpp"
#include "ttune/pipeline/trainer.hpp"
#include "ttune/vectorizer/vectorizer.hpp"

namespace ttune::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct ModelFlags {
  std::size_t d_backbone = 64;
  std::size_t d_ff = 128;
  std::uint64_t backbone_seed = 1234;
  std::size_t max_context = 400;
  std::size_t d_init = 1024;
  std::size_t d_down = 8;
  std::size_t d_up = 128;
  std::size_t d_abf = 8;
  double leaky_slope = 0.2;
  std::string fusion = "abfl";
  std::string softmax_axis = "tokens";
  bool no_residual = false;
  std::string vectorizer = "binary";
  std::string vectorizer_table;
  std::size_t max_nodes = 50;
};

struct TrainFlags {
  std::size_t epochs = 1;
  std::size_t batch = 8;
  double lr = 3e-4;
  double max_grad_norm = 1.0;
  std::uint64_t seed = 8;
  std::size_t eval_batch = 32;
  std::size_t max_steps = 0;
  double weight_decay = 0.01;
};

void add_transducer_flags(CLI::App* app, ModelFlags& f) {
  app->add_option("--d-init", f.d_init, "node vector width")->capture_default_str();
  app->add_option("--d-down", f.d_down, "down-projection width")->capture_default_str();
  app->add_option("--d-up", f.d_up, "up-projection width (graph vector G)")->capture_default_str();
  app->add_option("--d-abf", f.d_abf, "fusion attention width")->capture_default_str();
  app->add_option("--leaky-slope", f.leaky_slope, "GATv2 leaky ReLU slope")->capture_default_str();
  app->add_option("--fusion", f.fusion, "abfl | sum")->capture_default_str()->check(CLI::IsMember({"abfl", "sum"}));
  app->add_option("--softmax-axis", f.softmax_axis, "fusion softmax axis: tokens | keys")
      ->capture_default_str()
      ->check(CLI::IsMember({"tokens", "keys"}));
  app->add_flag("--no-residual", f.no_residual, "drop the residual c_init term in the fusion layer");
}

void add_model_flags(CLI::App* app, ModelFlags& f) {
  app->add_option("--d-backbone", f.d_backbone, "backbone width")->capture_default_str();
  app->add_option("--d-ff", f.d_ff, "backbone feed-forward width")->capture_default_str();
  app->add_option("--backbone-seed", f.backbone_seed, "seed of the frozen backbone weights")->capture_default_str();
  app->add_option("--max-context", f.max_context, "maximum input tokens")->capture_default_str();
  add_transducer_flags(app, f);
  app->add_option("--vectorizer", f.vectorizer, "node label vectorizer: binary | tfidf | external")
      ->capture_default_str()
      ->check(CLI::IsMember({"binary", "tfidf", "external"}));
  app->add_option("--vectorizer-table", f.vectorizer_table, "JSON table for --vectorizer external");
  app->add_option("--max-nodes", f.max_nodes, "graph size cap (ENTRY/EXIT excluded)")->capture_default_str();
}

void add_train_flags(CLI::App* app, TrainFlags& f) {
  app->add_option("--epochs", f.epochs, "training epochs")->capture_default_str();
  app->add_option("--batch", f.batch, "training batch size")->capture_default_str();
  app->add_option("--lr", f.lr, "peak learning rate (linear decay, no warmup)")->capture_default_str();
  app->add_option("--max-grad-norm", f.max_grad_norm, "global gradient norm clip")->capture_default_str();
  app->add_option("--seed", f.seed, "seed for init and shuffling (reference pair: 8, 18)")->capture_default_str();
  app->add_option("--eval-batch", f.eval_batch, "evaluation batch size")->capture_default_str();
  app->add_option("--max-steps", f.max_steps, "stop after this many steps (0 = all epochs)")->capture_default_str();
  app->add_option("--weight-decay", f.weight_decay, "AdamW decoupled weight decay")->capture_default_str();
}

void add_config_flag(CLI::App* app) {
  // Consumed by expand_config before parsing; declared for --help.
  app->add_option("--config", "JSON file of flag values; explicit flags take precedence");
}

transducer::TransducerConfig transducer_config(const ModelFlags& f) {
  transducer::TransducerConfig t;
  t.d_init = f.d_init;
  t.d_down = f.d_down;
  t.d_up = f.d_up;
  t.d_abf = f.d_abf;
  t.d_backbone = f.d_backbone;
  t.leaky_slope = f.leaky_slope;
  t.fusion = f.fusion == "sum" ? transducer::Fusion::Sum : transducer::Fusion::Abfl;
  t.softmax_axis = f.softmax_axis == "keys" ? transducer::SoftmaxAxis::Keys : transducer::SoftmaxAxis::Tokens;
  t.residual = !f.no_residual;
  return t;
}

vec::VectorizerModel vectorizer_model(const ModelFlags& f, const std::vector<pipeline::Sample>& corpus) {
  const auto mode = vec::parse_mode(f.vectorizer);
  if (mode == vec::VectorizerMode::External) {
    if (f.vectorizer_table.empty()) fail(ErrorKind::InvalidConfig, "--vectorizer external needs --vectorizer-table");
    auto model = vec::load_external_table(pipeline::read_file(f.vectorizer_table));
    if (model.d_init != f.d_init) {
      fail(ErrorKind::DimMismatch, "table dim " + std::to_string(model.d_init) + " != --d-init " +
                                       std::to_string(f.d_init));
    }
    return model;
  }
  std::vector<std::string> labels;
  if (mode == vec::VectorizerMode::Tfidf) {
    for (const auto& s : corpus) {
      try {
        for (auto& l : vec::node_labels(cpg::build_cpg(s.code, f.max_nodes))) labels.push_back(std::move(l));
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::SyntaxError && e.kind() != ErrorKind::GraphTooLarge) throw;
      }
    }
  }
  return vec::fit(labels, mode, f.d_init);
}

pipeline::ModelConfig model_config(const ModelFlags& f, const pipeline::Mode& mode,
                                   const std::vector<pipeline::Sample>& corpus) {
  pipeline::ModelConfig c;
  c.mode = mode;
  c.backbone.d_model = f.d_backbone;
  c.backbone.d_ff = f.d_ff;
  c.backbone.seed = f.backbone_seed;
  c.backbone.max_context = f.max_context;
  c.transducer = transducer_config(f);
  c.vectorizer = vectorizer_model(f, corpus);
  c.vocab = pipeline::build_vocab(corpus);
  c.max_nodes = f.max_nodes;
  return c;
}

pipeline::TrainConfig train_config(const TrainFlags& f) {
  pipeline::TrainConfig t;
  t.epochs = f.epochs;
  t.batch = f.batch;
  t.lr = f.lr;
  t.max_grad_norm = f.max_grad_norm;
  t.seed = f.seed;
  t.eval_batch = f.eval_batch;
  t.max_steps = f.max_steps;
  t.weight_decay = f.weight_decay;
  t.validate();
  return t;
}

fs::path report_path_for(const fs::path& checkpoint) {
  fs::path p = checkpoint;
  p.replace_extension();
  p += ".report.json";
  return p;
}

void write_json_line(std::ostream& err, std::string_view kind, std::string_view message) {
  err << json{{"error", kind}, {"message", message}}.dump() << "\n";
}

// Tuning: hold out 20% of the (seed-shuffled) training data, pick the
// learning rate with the best held-out BLEU, then train on everything.
double tune_lr(const pipeline::ModelConfig& config, const std::vector<pipeline::Sample>& data,
               pipeline::TrainConfig train, std::ostream& log) {
  std::vector<pipeline::Sample> shuffled = data;
  Rng rng(train.seed);
  rng.shuffle(std::span<pipeline::Sample>(shuffled));
  const std::size_t n_valid = std::max<std::size_t>(1, shuffled.size() / 5);
  if (shuffled.size() < 2) fail(ErrorKind::EmptyDataset, "--tune needs at least two samples");
  std::vector<pipeline::Sample> valid(shuffled.end() - static_cast<long>(n_valid), shuffled.end());
  std::vector<pipeline::Sample> fit(shuffled.begin(), shuffled.end() - static_cast<long>(n_valid));
  double best_lr = train.lr, best = -1.0;
  for (double lr : {1e-4, 3e-4, 1e-3, 3e-3, 1e-2}) {
    pipeline::Session session(config, train.seed);
    train.lr = lr;
    pipeline::train(session, fit, train);
    const double bleu = pipeline::evaluate(session, valid).bleu.score;
    log << json{{"tune_lr", lr}, {"valid_bleu", bleu}}.dump() << "\n";
    if (bleu > best) {
      best = bleu;
      best_lr = lr;
    }
  }
  return best_lr;
}

}  // namespace

std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  std::string config_file;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw CLI::ArgumentMismatch("--config", 1, 0);
      config_file = args[++i];
    } else if (args[i].starts_with("--config=")) {
      config_file = args[i].substr(9);
    } else {
      out.push_back(args[i]);
    }
  }
  if (config_file.empty()) return out;

  json doc;
  try {
    doc = json::parse(pipeline::read_file(config_file));
  } catch (const json::parse_error& e) {
    fail(ErrorKind::SchemaError, config_file + ": " + e.what());
  }
  if (!doc.is_object()) fail(ErrorKind::SchemaError, config_file + ": expected a JSON object");

  auto sub = std::find_if(out.begin(), out.end(), [](const std::string& a) { return !a.starts_with("-"); });
  if (sub == out.end()) return out;
  const std::string subcommand = *sub;

  std::set<std::string> given;
  for (const auto& a : out)
    if (a.starts_with("--")) given.insert(a.substr(0, a.find('=')));

  std::vector<std::string> extra;
  auto add_entries = [&](const json& obj) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (it->is_object()) continue;
      const std::string flag = "--" + it.key();
      if (given.count(flag)) continue;
      const json& v = *it;
      if (v.is_boolean()) {
        if (v.get<bool>()) extra.push_back(flag);
      } else if (v.is_array()) {
        extra.push_back(flag);
        for (const auto& x : v) extra.push_back(x.is_string() ? x.get<std::string>() : x.dump());
      } else {
        extra.push_back(flag);
        extra.push_back(v.is_string() ? v.get<std::string>() : v.dump());
      }
      given.insert(flag);
    }
  };
  if (auto it = doc.find(subcommand); it != doc.end() && it->is_object()) add_entries(*it);
  add_entries(doc);
  out.insert(sub + 1, extra.begin(), extra.end());
  return out;
}

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Graph-aware adapter tuning toolkit for a frozen encoder-decoder", "ttune"};
  app.require_subcommand(1);
  app.fallthrough(false);

  // extract-cpg
  std::string cpg_input, cpg_output;
  std::size_t cpg_max_nodes = 50;
  bool cpg_all = false;
  auto* extract = app.add_subcommand("extract-cpg", "Build the code property graph of a mini-language file");
  extract->add_option("input", cpg_input, "source file")->required();
  extract->add_option("-o,--output", cpg_output, "output JSON file")->required();
  extract->add_option("--max-nodes", cpg_max_nodes, "graph size cap (ENTRY/EXIT excluded)")->capture_default_str();
  extract->add_flag("--all", cpg_all, "emit a JSON array with one graph per function");
  add_config_flag(extract);

  // vectorize
  std::string vec_input, vec_output;
  bool vec_from_json = false;
  ModelFlags vec_flags;
  auto* vectorize = app.add_subcommand("vectorize", "Turn a source file or CPG JSON into node vectors and adjacency");
  vectorize->add_option("input", vec_input, "source file, or CPG JSON with --from-json")->required();
  vectorize->add_option("-o,--output", vec_output, "output JSON file")->required();
  vectorize->add_flag("--from-json", vec_from_json, "input is CPG JSON (e.g. exported from another extractor)");
  vectorize->add_option("--vectorizer", vec_flags.vectorizer, "binary | tfidf | external")
      ->capture_default_str()
      ->check(CLI::IsMember({"binary", "tfidf", "external"}));
  vectorize->add_option("--vectorizer-table", vec_flags.vectorizer_table, "JSON table for --vectorizer external");
  vectorize->add_option("--d-init", vec_flags.d_init, "node vector width")->capture_default_str();
  vectorize->add_option("--max-nodes", vec_flags.max_nodes, "graph size cap")->capture_default_str();
  add_config_flag(vectorize);

  // dedup
  std::string dd_input, dd_output, dd_report;
  data::DedupConfig dd_config;
  auto* dedup = app.add_subcommand("dedup", "Remove exact and near-duplicate samples from a JSONL dataset");
  dedup->add_option("input", dd_input, "dataset JSONL")->required();
  dedup->add_option("-o,--output", dd_output, "deduplicated JSONL")->required();
  dedup->add_option("--report", dd_report, "JSON list of removed pairs");
  dedup->add_option("--threshold", dd_config.threshold, "Jaccard estimate above which items are duplicates")
      ->capture_default_str();
  dedup->add_option("--permutations", dd_config.permutations, "MinHash signature length")->capture_default_str();
  dedup->add_option("--bands", dd_config.bands, "LSH bands")->capture_default_str();
  dedup->add_option("--hash-seed", dd_config.seed, "MinHash seed")->capture_default_str();
  add_config_flag(dedup);

  // check-leakage
  std::string lk_train, lk_valid, lk_test, lk_output, lk_clean_valid, lk_clean_test;
  data::DedupConfig lk_config;
  auto* leak = app.add_subcommand("check-leakage", "Report validation/test items duplicated from training data");
  leak->add_option("--train", lk_train, "training JSONL")->required();
  leak->add_option("--valid", lk_valid, "validation JSONL");
  leak->add_option("--test", lk_test, "test JSONL");
  leak->add_option("-o,--output", lk_output, "leak report JSON")->required();
  leak->add_option("--clean-valid", lk_clean_valid, "write the validation split without leaks");
  leak->add_option("--clean-test", lk_clean_test, "write the test split without leaks");
  leak->add_option("--threshold", lk_config.threshold, "Jaccard estimate threshold")->capture_default_str();
  add_config_flag(leak);

  // stats
  std::string st_input, st_output;
  std::size_t st_max_nodes = 50;
  auto* stats = app.add_subcommand("stats", "Dataset statistics (nodes, edges, tokens)");
  stats->add_option("input", st_input, "dataset JSONL")->required();
  stats->add_option("-o,--output", st_output, "also write the statistics as JSON");
  stats->add_option("--max-nodes", st_max_nodes, "graph size cap")->capture_default_str();
  add_config_flag(stats);

  // synth
  std::size_t sy_count = 512;
  std::uint64_t sy_seed = 8;
  std::string sy_output;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic mini-language dataset");
  synth->add_option("-n,--count", sy_count, "number of samples")->capture_default_str();
  synth->add_option("--seed", sy_seed, "generator seed")->capture_default_str();
  synth->add_option("-o,--output", sy_output, "output JSONL")->required();
  add_config_flag(synth);

  // train
  std::string tr_data, tr_output, tr_eval, tr_mode = "transducer";
  bool tr_tune = false;
  std::size_t tr_beam = 4;
  ModelFlags tr_model;
  TrainFlags tr_train;
  auto* train = app.add_subcommand("train", "Train one adaptation mode on top of the frozen backbone");
  train->add_option("--data", tr_data, "training JSONL")->required();
  train->add_option("-o,--output", tr_output, "checkpoint JSON (a .report.json is written beside it)")->required();
  train->add_option("--mode", tr_mode,
                    "none | full_ft | linear_adapter | lora[:4|8] | prompt_tuning[:5|10|25|50] | transducer | "
                    "gve_only | abfl_only")
      ->capture_default_str();
  train->add_option("--eval", tr_eval, "JSONL scored with smoothed BLEU in the run report");
  train->add_option("--beam", tr_beam, "beam width for --eval")->capture_default_str();
  train->add_flag("--tune", tr_tune, "pick the learning rate on a 20% held-out split first");
  add_model_flags(train, tr_model);
  add_train_flags(train, tr_train);
  add_config_flag(train);

  // infer
  std::string in_checkpoint, in_data, in_output;
  std::size_t in_beam = 4, in_max_len = 0;
  auto* infer = app.add_subcommand("infer", "Generate predictions for a JSONL dataset");
  infer->add_option("--checkpoint", in_checkpoint, "checkpoint JSON")->required();
  infer->add_option("--data", in_data, "input JSONL")->required();
  infer->add_option("-o,--output", in_output, "predictions JSONL ({id, prediction})")->required();
  infer->add_option("--beam", in_beam, "beam width (1 = greedy)")->capture_default_str();
  infer->add_option("--max-len", in_max_len, "generation cap (0 = longest target + 1)")->capture_default_str();
  add_config_flag(infer);

  // evaluate
  std::string ev_checkpoint, ev_data, ev_output;
  std::size_t ev_beam = 4, ev_max_len = 0, ev_d_backbone = 0;
  auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint with corpus smoothed BLEU");
  evaluate->add_option("--checkpoint", ev_checkpoint, "checkpoint JSON")->required();
  evaluate->add_option("--data", ev_data, "reference JSONL")->required();
  evaluate->add_option("-o,--output", ev_output, "run report JSON")->required();
  evaluate->add_option("--beam", ev_beam, "beam width (1 = greedy)")->capture_default_str();
  evaluate->add_option("--max-len", ev_max_len, "generation cap (0 = longest target + 1)")->capture_default_str();
  evaluate->add_option("--d-backbone", ev_d_backbone, "expected backbone width (0 = accept the checkpoint's)")
      ->capture_default_str();
  add_config_flag(evaluate);

  // count-params
  ModelFlags cp_model;
  cp_model.d_backbone = 768;
  std::string cp_mode = "transducer";
  std::size_t cp_vocab = 32100;
  bool cp_all = false;
  auto* count = app.add_subcommand("count-params", "Trainable parameter count of a mode");
  count->add_option("--d-backbone", cp_model.d_backbone, "backbone width")->capture_default_str();
  count->add_option("--d-ff", cp_model.d_ff, "backbone feed-forward width (full_ft row)")->capture_default_str();
  count->add_option("--vocab-size", cp_vocab, "vocabulary size (full_ft row)")->capture_default_str();
  count->add_option("--mode", cp_mode, "mode to count")->capture_default_str();
  count->add_flag("--all", cp_all, "print every mode");
  add_transducer_flags(count, cp_model);
  add_config_flag(count);

  // gradcheck
  ModelFlags gc_model;
  std::size_t gc_nodes = 20;
  std::uint64_t gc_seed = 8;
  double gc_eps = 1e-5, gc_tol = 1e-4;
  std::string gc_output;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of transducer gradients");
  gradcheck->add_option("--d-backbone", gc_model.d_backbone, "backbone width")->capture_default_str();
  gradcheck->add_option("--nodes", gc_nodes, "CPG size of the probe program")->capture_default_str();
  gradcheck->add_option("--seed", gc_seed, "parameter seed")->capture_default_str();
  gradcheck->add_option("--eps", gc_eps, "central-difference step")->capture_default_str();
  gradcheck->add_option("--tolerance", gc_tol, "maximum relative error for exit 0")->capture_default_str();
  gradcheck->add_option("-o,--output", gc_output, "result JSON")->required();
  add_transducer_flags(gradcheck, gc_model);
  add_config_flag(gradcheck);

  try {
    std::vector<std::string> args = expand_config(raw_args);
    std::vector<const char*> argv{"ttune"};
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
      out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().back()->help());
      return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
      out << app.help("", CLI::AppFormatMode::All);
      return kExitOk;
    }

    if (extract->parsed()) {
      const std::string source = pipeline::read_file(cpg_input);
      std::string text;
      if (cpg_all) {
        json arr = json::array();
        for (const auto& g : cpg::build_cpgs(source, cpg_max_nodes)) arr.push_back(json::parse(cpg::cpg_to_json(g)));
        text = arr.dump(2) + "\n";
      } else {
        text = cpg::cpg_to_json(cpg::build_cpg(source, cpg_max_nodes));
      }
      pipeline::write_file_atomic(cpg_output, text);
    } else if (vectorize->parsed()) {
      const std::string text = pipeline::read_file(vec_input);
      const cpg::Cpg graph = vec_from_json ? cpg::cpg_from_json(text) : cpg::build_cpg(text, vec_flags.max_nodes);
      pipeline::Sample one{"input", vec_from_json ? std::string() : text, ""};
      vec::VectorizerModel model;
      if (vec_flags.vectorizer == "tfidf") {
        model = vec::fit(vec::node_labels(graph), vec::VectorizerMode::Tfidf, vec_flags.d_init);
      } else {
        model = vectorizer_model(vec_flags, {});
      }
      pipeline::write_file_atomic(vec_output, vec::graph_tensors_to_json(vec::vectorize_graph(model, graph)));
    } else if (dedup->parsed()) {
      const auto corpus = pipeline::read_jsonl(dd_input);
      const auto result = data::dedup(corpus, dd_config);
      std::vector<pipeline::Sample> kept;
      for (std::size_t i : result.retained) kept.push_back(corpus[i]);
      pipeline::write_jsonl(dd_output, kept);
      if (!dd_report.empty()) pipeline::write_file_atomic(dd_report, data::dedup_result_to_json(result));
    } else if (leak->parsed()) {
      const auto train_set = pipeline::read_jsonl(lk_train);
      const auto valid = lk_valid.empty() ? std::vector<pipeline::Sample>{} : pipeline::read_jsonl(lk_valid);
      const auto test = lk_test.empty() ? std::vector<pipeline::Sample>{} : pipeline::read_jsonl(lk_test);
      const auto report = data::cross_split_check(train_set, valid, test, lk_config);
      pipeline::write_file_atomic(lk_output, data::leak_report_to_json(report.leaks));
      if (!lk_clean_valid.empty()) pipeline::write_jsonl(lk_clean_valid, report.valid);
      if (!lk_clean_test.empty()) pipeline::write_jsonl(lk_clean_test, report.test);
    } else if (stats->parsed()) {
      const auto s = data::dataset_stats(pipeline::read_jsonl(st_input), st_max_nodes);
      out << data::stats_to_text(s);
      if (!st_output.empty()) pipeline::write_file_atomic(st_output, data::stats_to_json(s));
    } else if (synth->parsed()) {
      pipeline::write_jsonl(sy_output, data::synth_corpus(sy_count, sy_seed));
    } else if (train->parsed()) {
      const auto started = std::chrono::steady_clock::now();
      const auto dataset = pipeline::read_jsonl(tr_data);
      if (dataset.empty()) fail(ErrorKind::EmptyDataset, tr_data + " has no samples");
      const pipeline::Mode mode = pipeline::parse_mode(tr_mode);
      const pipeline::ModelConfig config = model_config(tr_model, mode, dataset);
      pipeline::TrainConfig tc = train_config(tr_train);
      if (tr_tune && config.mode.kind != pipeline::ModeKind::None) tc.lr = tune_lr(config, dataset, tc, err);

      pipeline::Session session(config, tc.seed);
      const double initial = pipeline::mean_loss(session, dataset);
      const auto stats_run = pipeline::train(session, dataset, tc);
      const double final_loss = pipeline::mean_loss(session, dataset);
      const pipeline::Checkpoint checkpoint = pipeline::make_checkpoint(session, tc);
      pipeline::save_checkpoint(tr_output, checkpoint);

      pipeline::RunReport report;
      report.mode = mode.label();
      report.trainable_param_count = stats_run.observed_grad_params;
      report.declared_param_count = stats_run.declared_params;
      report.seed = tc.seed;
      report.steps = stats_run.steps;
      report.skipped_samples = stats_run.skipped_samples;
      report.initial_loss = initial;
      report.final_loss = final_loss;
      if (!tr_eval.empty()) {
        report.metric_name = "smoothed_bleu";
        report.metric_value = pipeline::evaluate(session, pipeline::read_jsonl(tr_eval), tr_beam).bleu.score;
      } else {
        report.metric_name = "train_loss";
        report.metric_value = final_loss;
      }
      report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      pipeline::write_file_atomic(report_path_for(tr_output), pipeline::run_report_to_json(report));
    } else if (infer->parsed()) {
      pipeline::Session session = pipeline::restore_session(pipeline::load_checkpoint(in_checkpoint));
      const auto dataset = pipeline::read_jsonl(in_data);
      std::size_t max_len = in_max_len;
      if (max_len == 0) {
        for (const auto& s : dataset) max_len = std::max(max_len, session.config().vocab.encode(s.target).size());
        max_len = max_len == 0 ? 32 : max_len + 1;
      }
      std::string lines;
      for (const auto& s : dataset) {
        lines += json{{"id", s.id}, {"prediction", session.predict(s.code, max_len, in_beam)}}.dump() + "\n";
      }
      pipeline::write_file_atomic(in_output, lines);
    } else if (evaluate->parsed()) {
      const auto started = std::chrono::steady_clock::now();
      const pipeline::Checkpoint checkpoint = pipeline::load_checkpoint(ev_checkpoint);
      if (ev_d_backbone != 0) pipeline::check_compatible(checkpoint, ev_d_backbone);
      pipeline::Session session = pipeline::restore_session(checkpoint);
      const auto result = pipeline::evaluate(session, pipeline::read_jsonl(ev_data), ev_beam, ev_max_len);
      pipeline::RunReport report;
      report.mode = checkpoint.config.mode.label();
      report.trainable_param_count = session.trainable_count();
      report.declared_param_count = session.trainable_count();
      report.metric_name = "smoothed_bleu";
      report.metric_value = result.bleu.score;
      report.seed = checkpoint.train.seed;
      report.skipped_samples = result.failed_samples;
      report.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      pipeline::write_file_atomic(ev_output, pipeline::run_report_to_json(report));
    } else if (count->parsed()) {
      const auto t = transducer_config(cp_model);
      const auto rows = pipeline::param_report(cp_model.d_backbone, cp_model.d_ff, cp_vocab, t);
      if (cp_all) {
        for (const auto& r : rows) {
          char line[128];
          std::snprintf(line, sizeof line, "%-18s %12zu  %s\n", r.mode.c_str(), r.count,
                        pipeline::format_thousands(r.count).c_str());
          out << line;
        }
      } else {
        const std::string label = pipeline::parse_mode(cp_mode).label();
        auto it = std::find_if(rows.begin(), rows.end(), [&](const pipeline::ParamRow& r) { return r.mode == label; });
        if (it == rows.end()) fail(ErrorKind::InvalidConfig, "no count for mode " + label);
        out << it->count << " (" << pipeline::format_thousands(it->count) << ")\n";
      }
    } else if (gradcheck->parsed()) {
      const auto t = transducer_config(gc_model);
      const auto r = pipeline::transducer_grad_check(t, gc_model.d_backbone, gc_nodes, gc_seed, gc_eps);
      const json j = {{"max_relative_error", r.result.max_relative_error},
                      {"worst_parameter", r.result.worst_parameter},
                      {"worst_index", r.result.worst_index},
                      {"checked_scalars", r.result.checked_scalars},
                      {"graph_nodes", r.graph_nodes},
                      {"tolerance", gc_tol},
                      {"passed", r.result.max_relative_error <= gc_tol}};
      pipeline::write_file_atomic(gc_output, j.dump(2) + "\n");
      if (r.result.max_relative_error > gc_tol) {
        write_json_line(err, "GradCheckFailed", "max relative error " + std::to_string(r.result.max_relative_error));
        return kExitDomainError;
      }
    }
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    write_json_line(err, "UsageError", e.what());
    return kExitUsage;
  } catch (const Error& e) {
    write_json_line(err, error_kind_name(e.kind()), e.what());
    return kExitDomainError;
  } catch (const std::exception& e) {
    write_json_line(err, "InternalError", e.what());
    return kExitDomainError;
  }
}

}  // namespace ttune::cli
