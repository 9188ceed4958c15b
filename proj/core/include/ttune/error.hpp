// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ttune {

enum class ErrorKind {
  ShapeMismatch,
  NonFinite,
  EmptyInput,
  NotScalar,
  MissingGrad,
  OutOfRange,
  SyntaxError,
  GraphTooLarge,
  SchemaError,
  EmptyCorpus,
  UnknownLabel,
  ContextTooLong,
  EmptyTarget,
  EmptyDataset,
  AllSamplesSkipped,
  DimMismatch,
  LengthMismatch,
  VersionMismatch,
  EmptyTokenSet,
  InvalidConfig,
  IoError,
};

std::string_view error_kind_name(ErrorKind kind) noexcept;

/// Every domain failure in the library is reported through this type; the
/// kind is what callers branch on, the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Parse failures carry the 1-based source line.
class SyntaxError : public Error {
 public:
  SyntaxError(int line, const std::string& message)
      : Error(ErrorKind::SyntaxError, "line " + std::to_string(line) + ": " + message), line_(line) {}

  int line() const noexcept { return line_; }

 private:
  int line_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace ttune
