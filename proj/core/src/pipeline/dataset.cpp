// SPDX-License-Identifier: Apache-2.0
#include "ttune/pipeline/dataset.hpp"

#include <fstream>
#include <sstream>
#include <system_error>

#include <json.hpp>

#include "ttune/error.hpp"

namespace ttune::pipeline {

std::vector<Sample> parse_jsonl(std::string_view text) {
  std::vector<Sample> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      if (eol == text.size()) break;
      continue;
    }
    const std::string where = "line " + std::to_string(line_no);
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorKind::SchemaError, where + ": invalid JSON: " + e.what());
    }
    if (!obj.is_object()) fail(ErrorKind::SchemaError, where + ": expected an object");
    Sample s;
    for (auto [key, field] : {std::pair{"id", &s.id}, std::pair{"code", &s.code}, std::pair{"target", &s.target}}) {
      auto it = obj.find(key);
      if (it == obj.end() || !it->is_string()) fail(ErrorKind::SchemaError, where + ": $." + key + " must be a string");
      *field = it->get<std::string>();
    }
    out.push_back(std::move(s));
    if (eol == text.size()) break;
  }
  return out;
}

std::string to_jsonl(const std::vector<Sample>& samples) {
  std::string out;
  for (const auto& s : samples) {
    nlohmann::json obj = {{"id", s.id}, {"code", s.code}, {"target", s.target}};
    out += obj.dump();
    out += '\n';
  }
  return out;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::IoError, "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) fail(ErrorKind::IoError, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::IoError, "cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::vector<Sample> read_jsonl(const std::filesystem::path& path) { return parse_jsonl(read_file(path)); }

void write_jsonl(const std::filesystem::path& path, const std::vector<Sample>& samples) {
  write_file_atomic(path, to_jsonl(samples));
}

}  // namespace ttune::pipeline
