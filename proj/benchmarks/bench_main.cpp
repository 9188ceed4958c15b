// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "ttune/cpg/cpg.hpp"
#include "ttune/data/minhash.hpp"
#include "ttune/data/synth.hpp"
#include "ttune/numerics/matrix.hpp"
#include "ttune/numerics/ops.hpp"
#include "ttune/numerics/random.hpp"
#include "ttune/numerics/tape.hpp"
#include "ttune/pipeline/gradcheck.hpp"
#include "ttune/transducer/transducer.hpp"
#include "ttune/vectorizer/vectorizer.hpp"

using namespace ttune;

namespace {

Matrix random(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  return uniform_matrix(r, c, -1.0, 1.0, rng);
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Matrix a = random(n, n, 1), b = random(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(matmul_values(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(128)->Arg(256);

void BM_BuildCpg(benchmark::State& state) {
  const std::string code = pipeline::program_with_nodes(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(cpg::build_cpg(code, 1000));
}
BENCHMARK(BM_BuildCpg)->Arg(10)->Arg(50)->Arg(200);

void transducer_step(benchmark::State& state, bool backward) {
  transducer::TransducerConfig cfg;
  cfg.d_backbone = static_cast<std::size_t>(state.range(0));
  ParamStore store = transducer::init_params(cfg, 8);
  const auto model = vec::fit({}, vec::VectorizerMode::Binary, cfg.d_init);
  const auto graph = vec::vectorize_graph(model, cpg::build_cpg(pipeline::program_with_nodes(50)));
  const Matrix c_init = random(40, cfg.d_backbone, 3);
  for (auto _ : state) {
    Tape tape(backward);
    const auto bound = transducer::bind(tape, store, cfg);
    Var out = transducer::fuse(tape, tape.constant(c_init), &graph, bound, cfg);
    benchmark::DoNotOptimize(out.value());
    if (backward) {
      store.zero_grad();
      tape.backward(ops::sum(out));
    }
  }
}

void BM_TransducerForward(benchmark::State& state) { transducer_step(state, false); }
void BM_TransducerBackward(benchmark::State& state) { transducer_step(state, true); }
BENCHMARK(BM_TransducerForward)->Arg(64)->Arg(768);
BENCHMARK(BM_TransducerBackward)->Arg(64)->Arg(768);

void BM_MinHash(benchmark::State& state) {
  const auto corpus = data::synth_corpus(64, 8);
  std::vector<data::TokenSet> sets;
  for (const auto& s : corpus) sets.push_back(data::token_set(s.code));
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(data::minhash(sets[i++ % sets.size()]));
}
BENCHMARK(BM_MinHash);

}  // namespace

BENCHMARK_MAIN();
