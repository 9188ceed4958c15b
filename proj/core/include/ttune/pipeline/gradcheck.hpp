// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "ttune/numerics/grad_check.hpp"
#include "ttune/pipeline/session.hpp"

namespace ttune::pipeline {

/// Straight-line/branching mini-language function whose CPG has exactly
/// `nodes` nodes (ENTRY, one PARAM and EXIT included). nodes >= 4.
std::string program_with_nodes(std::size_t nodes);

struct TransducerGradCheck {
  GradCheckResult result;
  std::size_t graph_nodes = 0;
  double seconds = 0.0;
};

/// Finite-difference check of every transducer parameter through
/// transduce -> encode -> decode_loss. Parameters are first re-drawn
/// uniformly in [-0.5, 0.5] (gains around 1) so no gradient is trivially
/// zero.
TransducerGradCheck transducer_grad_check(const transducer::TransducerConfig& transducer, std::size_t d_backbone,
                                          std::size_t nodes, std::uint64_t seed, double eps = 1e-5);

}  // namespace ttune::pipeline
