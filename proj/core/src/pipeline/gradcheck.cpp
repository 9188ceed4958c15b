// SPDX-License-Identifier: Apache-2.0
#include "ttune/pipeline/gradcheck.hpp"

#include <chrono>

#include "ttune/cpg/cpg.hpp"
#include "ttune/error.hpp"
#include "ttune/numerics/random.hpp"
#include "ttune/pipeline/trainer.hpp"

namespace ttune::pipeline {

std::string program_with_nodes(std::size_t nodes) {
  if (nodes < 4) fail(ErrorKind::InvalidConfig, "need at least 4 nodes (ENTRY, PARAM, one statement, EXIT)");
  std::size_t statements = nodes - 3;
  std::string code = "def probe(x):\n";
  std::size_t i = 0;
  while (statements >= 3) {
    code += "    y = load(x)\n";
    code += "    if y > " + std::to_string(i % 20) + ":\n";
    code += "        x = send(y)\n";
    statements -= 3;
    ++i;
  }
  while (statements-- > 0) code += "    log(x)\n";
  return code;
}

TransducerGradCheck transducer_grad_check(const transducer::TransducerConfig& transducer, std::size_t d_backbone,
                                          std::size_t nodes, std::uint64_t seed, double eps) {
  const Sample sample{"probe", program_with_nodes(nodes), "load send log"};
  ModelConfig config;
  config.mode = Mode::of(ModeKind::Transducer);
  config.backbone.d_model = d_backbone;
  config.transducer = transducer;
  config.vectorizer.d_init = transducer.d_init;
  config.vocab = build_vocab({sample});
  Session session(config, seed);

  Rng rng(splitmix64(seed));
  for (const auto& name : session.mode_param_names()) {
    const bool gain = name.ends_with("g_gve") || name.ends_with("g_c") || name.ends_with("g_g");
    for (double& v : session.store().at(name).value.values()) v = (gain ? 1.0 : 0.0) + rng.uniform(-0.5, 0.5);
  }

  const Prepared input = session.prepare(sample);
  TransducerGradCheck out;
  out.graph_nodes = input.graph->node_count;
  const auto start = std::chrono::steady_clock::now();
  out.result = grad_check([&](Tape& tape) { return session.loss(tape, input); }, session.store(), eps);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace ttune::pipeline
