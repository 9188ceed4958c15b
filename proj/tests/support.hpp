// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <doctest.h>

#include <filesystem>
#include <cmath>
#include <functional>
#include <string>

#include "ttune/error.hpp"
#include "ttune/numerics/matrix.hpp"
#include "ttune/numerics/random.hpp"

namespace ttune::test {

inline constexpr const char* kBranchProgram =
    "def main():\n"
    "    x = a()\n"
    "    if x > 10:\n"
    "        x = 0\n"
    "        b()\n";

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double range = 1.0) {
  return uniform_matrix(rows, cols, -range, range, rng);
}

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(TTUNE_TEST_DATA_DIR) / name;
}

// Plain-loop reference kernels for value oracles.

inline Matrix mm(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      out(i, j) = s;
    }
  return out;
}

inline Matrix rms_rows(const Matrix& x, const Matrix& g, double eps) {
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double ms = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) ms += x(i, j) * x(i, j);
    const double r = std::sqrt(ms / static_cast<double>(x.cols()) + eps);
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) = x(i, j) / r * g(0, j);
  }
  return out;
}

/// Kind of the ttune::Error thrown by `f`; fails the test when nothing is
/// thrown.
inline ErrorKind error_kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected a ttune::Error");
  return ErrorKind::IoError;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("ttune-" + tag + "-" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace ttune::test
