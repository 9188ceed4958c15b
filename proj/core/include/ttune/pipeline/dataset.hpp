// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace ttune::pipeline {

struct Sample {
  std::string id;
  std::string code;
  std::string target;

  friend bool operator==(const Sample&, const Sample&) = default;
};

/// One {"id", "code", "target"} object per line; blank lines are skipped.
/// SchemaError messages name the 1-based line.
std::vector<Sample> parse_jsonl(std::string_view text);
std::string to_jsonl(const std::vector<Sample>& samples);

std::vector<Sample> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<Sample>& samples);

std::string read_file(const std::filesystem::path& path);
/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace ttune::pipeline
