// SPDX-License-Identifier: Apache-2.0
#include "ttune/data/synth.hpp"

#include <array>

#include "ttune/cpg/ast.hpp"
#include "ttune/cpg/cpg.hpp"
#include "ttune/error.hpp"
#include "ttune/numerics/random.hpp"

namespace ttune::data {

namespace {

using cpg::AstKind;
using cpg::AstNode;

void collect_calls(const AstNode& node, std::vector<std::string>& out) {
  switch (node.kind) {
    case AstKind::Call:
      for (const auto& arg : node.children) collect_calls(arg, out);
      out.push_back(node.name);
      break;
    case AstKind::If:
      collect_calls(node.children[0], out);
      collect_calls(node.children[1], out);
      break;
    case AstKind::FuncDef:
      collect_calls(node.children.back(), out);
      break;
    default:
      for (const auto& c : node.children) collect_calls(c, out);
  }
}

constexpr std::array<std::string_view, 12> kCallees = {"load", "save",  "check", "parse", "send",   "read",
                                                       "write", "open", "close", "log",   "update", "reset"};
constexpr std::array<std::string_view, 4> kVars = {"x", "y", "z", "n"};
constexpr std::array<std::string_view, 4> kFunctions = {"main", "run", "step", "task"};

class Generator {
 public:
  explicit Generator(Rng& rng) : rng_(rng) {}

  std::string program() {
    out_.clear();
    out_ += "def ";
    out_ += pick(kFunctions);
    out_ += "(";
    const std::size_t params = rng_.index(3);
    for (std::size_t i = 0; i < params; ++i) out_ += (i ? ", " : "") + std::string(kVars[i]);
    out_ += "):\n";
    block(1, 2 + rng_.index(3));
    if (rng_.chance(0.2)) line(1, "return " + std::string(pick(kVars)));
    return out_;
  }

 private:
  template <std::size_t N>
  std::string_view pick(const std::array<std::string_view, N>& items) {
    return items[rng_.index(N)];
  }

  std::string operand() {
    if (rng_.chance(0.5)) return std::string(pick(kVars));
    return std::to_string(rng_.index(21));
  }

  std::string call() {
    std::string c(pick(kCallees));
    c += "(";
    if (rng_.chance(0.5)) c += operand();
    c += ")";
    return c;
  }

  void line(std::size_t depth, const std::string& text) {
    out_.append(4 * depth, ' ');
    out_ += text;
    out_ += '\n';
  }

  void block(std::size_t depth, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i) statement(depth);
  }

  void statement(std::size_t depth) {
    const double r = rng_.uniform();
    const bool nest = depth < 3;
    if (r < 0.3) {
      line(depth, call());
    } else if (r < 0.55) {
      line(depth, std::string(pick(kVars)) + " = " + call());
    } else if (r < 0.68) {
      const std::string v(pick(kVars));
      line(depth, rng_.chance(0.5) ? v + " = " + operand() : v + " = " + v + " + " + operand());
    } else if (r < 0.9 && nest) {
      line(depth, "if " + std::string(pick(kVars)) + (rng_.chance(0.5) ? " > " : " < ") + operand() + ":");
      block(depth + 1, 1 + rng_.index(2));
      if (rng_.chance(0.5)) {
        line(depth, "else:");
        block(depth + 1, 1 + rng_.index(2));
      }
    } else if (nest) {
      line(depth, "while " + std::string(pick(kVars)) + " < " + operand() + ":");
      block(depth + 1, 1 + rng_.index(2));
    } else {
      line(depth, call());
    }
  }

  Rng& rng_;
  std::string out_;
};

}  // namespace

std::string true_path_calls(std::string_view source) {
  const cpg::Program program = cpg::parse(source);
  if (program.functions.empty()) fail(ErrorKind::EmptyInput, "no function in source");
  std::vector<std::string> calls;
  collect_calls(program.functions.front(), calls);
  std::string out;
  for (const auto& c : calls) {
    if (!out.empty()) out += ' ';
    out += c;
  }
  return out;
}

std::vector<pipeline::Sample> synth_corpus(std::size_t n, std::uint64_t seed) {
  if (n == 0) fail(ErrorKind::InvalidConfig, "synth_corpus needs n >= 1");
  Rng rng(seed);
  Generator gen(rng);
  std::vector<pipeline::Sample> out;
  out.reserve(n);
  while (out.size() < n) {
    std::string code = gen.program();
    std::string target = true_path_calls(code);
    if (target.empty()) continue;
    try {
      cpg::build_cpg(code);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::GraphTooLarge) throw;
      continue;
    }
    out.push_back({"synth-" + std::to_string(seed) + "-" + std::to_string(out.size()), std::move(code),
                   std::move(target)});
  }
  return out;
}

}  // namespace ttune::data
