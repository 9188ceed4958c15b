// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <sstream>

#include <json.hpp>

#include "support.hpp"
#include "ttune/cli/cli.hpp"
#include "ttune/cpg/cpg.hpp"
#include "ttune/pipeline/dataset.hpp"

using namespace ttune;
using nlohmann::json;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(TTUNE_BINARY) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("count-params") {
  const auto r = run({"count-params", "--d-backbone", "768"});
  CHECK(r.code == 0);
  CHECK(r.out == "30744 (30.7K)\n");
  CHECK(run({"count-params", "--d-backbone", "1024"}).out == "37144 (37.1K)\n");
  const auto all = run({"count-params", "--all"});
  CHECK(all.code == 0);
  CHECK(all.out.find("589824") != std::string::npos);
  CHECK(run({"count-params", "--mode", "linear_adapter"}).out == "589824 (589.8K)\n");
  CHECK(run({"count-params", "--mode", "none"}).out == "0 (0.0K)\n");
}

TEST_CASE("extract-cpg matches the golden graph") {
  test::TempDir dir("cli-cpg");
  const auto r = run({"extract-cpg", test::data_path("branch.mini").string(), "-o", (dir / "g.json").string()});
  REQUIRE(r.code == 0);
  const auto built = cpg::cpg_from_json(pipeline::read_file(dir / "g.json"));
  const auto golden = cpg::cpg_from_json(pipeline::read_file(test::data_path("branch_cpg.json")));
  CHECK(built == golden);
}

TEST_CASE("train is reproducible and the pipeline runs end to end") {
  test::TempDir dir("cli-train");
  const std::string data = (dir / "d.jsonl").string();
  REQUIRE(run({"synth", "-n", "24", "--seed", "8", "-o", data}).code == 0);
  CHECK(pipeline::read_jsonl(data).size() == 24);

  const std::vector<std::string> common{"train", "--data", data, "--mode", "transducer", "--seed", "8",
                                        "--max-steps", "2", "--d-init", "64", "--eval", data, "--beam", "2"};
  auto with_output = [&](const std::string& name) {
    auto a = common;
    a.push_back("-o");
    a.push_back((dir / name).string());
    return a;
  };
  REQUIRE(run(with_output("a.json")).code == 0);
  REQUIRE(run(with_output("b.json")).code == 0);
  CHECK(pipeline::read_file(dir / "a.json") == pipeline::read_file(dir / "b.json"));

  const json report = json::parse(pipeline::read_file(dir / "a.report.json"));
  CHECK(report.at("mode") == "transducer");
  CHECK(report.at("seed") == 8);
  CHECK(report.at("steps") == 2);
  CHECK(report.at("trainable_param_count") == report.at("declared_param_count"));
  CHECK(report.at("metric").at("name") == "smoothed_bleu");

  const auto inf = run({"infer", "--checkpoint", (dir / "a.json").string(), "--data", data, "-o",
                        (dir / "p.jsonl").string(), "--beam", "2"});
  CHECK(inf.code == 0);
  const auto ev = run({"evaluate", "--checkpoint", (dir / "a.json").string(), "--data", data, "-o",
                       (dir / "e.json").string(), "--beam", "2"});
  CHECK(ev.code == 0);
  const json eval = json::parse(pipeline::read_file(dir / "e.json"));
  CHECK(eval.at("metric").at("value") == report.at("metric").at("value"));

  const auto dim = run({"evaluate", "--checkpoint", (dir / "a.json").string(), "--data", data, "-o",
                        (dir / "x.json").string(), "--d-backbone", "768"});
  CHECK(dim.code == cli::kExitDomainError);
  CHECK(json::parse(dim.err).at("error") == "DimMismatch");
}

TEST_CASE("data subcommands") {
  test::TempDir dir("cli-data");
  const std::string data = (dir / "d.jsonl").string();
  pipeline::write_jsonl(data, {{"1", test::kBranchProgram, "a b"}, {"2", test::kBranchProgram, "a b"}, {"3", "def f():\n    g()\n", "g"}});
  CHECK(run({"dedup", data, "-o", (dir / "dd.jsonl").string(), "--report", (dir / "r.json").string()}).code == 0);
  CHECK(pipeline::read_jsonl(dir / "dd.jsonl").size() == 2);

  CHECK(run({"check-leakage", "--train", data, "--test", data, "-o", (dir / "l.json").string(), "--clean-test",
             (dir / "ct.jsonl").string()})
            .code == 0);
  CHECK(json::parse(pipeline::read_file(dir / "l.json")).size() == 3);
  CHECK(pipeline::read_jsonl(dir / "ct.jsonl").empty());

  const auto st = run({"stats", data});
  CHECK(st.code == 0);
  CHECK(st.out.find("Total                3") != std::string::npos);

  CHECK(run({"vectorize", test::data_path("branch.mini").string(), "-o", (dir / "v.json").string(), "--d-init",
             "16"})
            .code == 0);
  CHECK(json::parse(pipeline::read_file(dir / "v.json")).at("h_init").size() == 6);
}

TEST_CASE("gradcheck subcommand") {
  test::TempDir dir("cli-gc");
  const auto r = run({"gradcheck", "--d-backbone", "16", "--nodes", "6", "-o", (dir / "g.json").string()});
  CHECK(r.code == 0);
  const json j = json::parse(pipeline::read_file(dir / "g.json"));
  CHECK(j.at("max_relative_error").get<double>() <= 1e-4);
}

TEST_CASE("exit codes and errors") {
  test::TempDir dir("cli-err");
  CHECK(run({}).code == cli::kExitUsage);
  CHECK(run({"no-such-command"}).code == cli::kExitUsage);
  CHECK(run({"count-params", "--bogus"}).code == cli::kExitUsage);
  CHECK(run({"count-params", "--mode", "lora:3"}).code == cli::kExitDomainError);
  const auto missing = run({"stats", (dir / "missing.jsonl").string()});
  CHECK(missing.code == cli::kExitDomainError);
  const json e = json::parse(missing.err);
  CHECK(e.at("error") == "IoError");
  CHECK(e.contains("message"));

  pipeline::write_file_atomic(dir / "bad.mini", "def f(:\n");
  const auto syntax = run({"extract-cpg", (dir / "bad.mini").string(), "-o", (dir / "o.json").string()});
  CHECK(syntax.code == cli::kExitDomainError);
  CHECK(json::parse(syntax.err).at("error") == "SyntaxError");
  CHECK_FALSE(std::filesystem::exists(dir / "o.json"));

  const auto help = run({"train", "--help"});
  CHECK(help.code == 0);
  for (const char* s : {"--epochs", "--lr", "0.0003", "--max-context", "400", "--batch", "--max-grad-norm"})
    CHECK(help.out.find(s) != std::string::npos);
}

TEST_CASE("binary exit codes") {
  CHECK(run_binary("count-params --d-backbone 768") == 0);
  CHECK(run_binary("count-params --bogus") == 2);
  CHECK(run_binary("stats /nonexistent/file.jsonl") == 1);
}

TEST_CASE("--config expansion") {
  test::TempDir dir("cli-config");
  pipeline::write_file_atomic(dir / "c.json", R"({"d-backbone": 1024, "all": false, "count-params": {"mode": "transducer"}})");
  const auto args = cli::expand_config({"count-params", "--config", (dir / "c.json").string()});
  CHECK(args == std::vector<std::string>{"count-params", "--mode", "transducer", "--d-backbone", "1024"});
  CHECK(run(args).out == "37144 (37.1K)\n");
  // Explicit flags win.
  const auto explicit_args =
      cli::expand_config({"count-params", "--d-backbone", "768", "--config", (dir / "c.json").string()});
  CHECK(run(explicit_args).out == "30744 (30.7K)\n");
  CHECK(run({"count-params", "--config", (dir / "c.json").string()}).out == "37144 (37.1K)\n");

  pipeline::write_file_atomic(dir / "bad.json", "[1, 2]");
  CHECK(run({"count-params", "--config", (dir / "bad.json").string()}).code != 0);
}
