// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ttune/pipeline/dataset.hpp"

namespace ttune::data {

/// Names of the functions called along the path that takes every branch
/// (if conditions true, loop bodies once), in execution order, space
/// separated. Uses the first function of `source`.
std::string true_path_calls(std::string_view source);

/// `n` seeded mini-language programs (assignments, calls, if/else, while)
/// whose target is true_path_calls of the program. Every program parses,
/// stays within the 50-node graph cap and has a non-empty target. Ids are
/// "synth-<seed>-<index>".
std::vector<pipeline::Sample> synth_corpus(std::size_t n, std::uint64_t seed);

}  // namespace ttune::data
