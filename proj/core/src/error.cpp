// SPDX-License-Identifier: Apache-2.0
#include "ttune/error.hpp"

namespace ttune {

std::string_view error_kind_name(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::EmptyInput: return "EmptyInput";
    case ErrorKind::NotScalar: return "NotScalar";
    case ErrorKind::MissingGrad: return "MissingGrad";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::SyntaxError: return "SyntaxError";
    case ErrorKind::GraphTooLarge: return "GraphTooLarge";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::EmptyCorpus: return "EmptyCorpus";
    case ErrorKind::UnknownLabel: return "UnknownLabel";
    case ErrorKind::ContextTooLong: return "ContextTooLong";
    case ErrorKind::EmptyTarget: return "EmptyTarget";
    case ErrorKind::EmptyDataset: return "EmptyDataset";
    case ErrorKind::AllSamplesSkipped: return "AllSamplesSkipped";
    case ErrorKind::DimMismatch: return "DimMismatch";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::VersionMismatch: return "VersionMismatch";
    case ErrorKind::EmptyTokenSet: return "EmptyTokenSet";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace ttune
