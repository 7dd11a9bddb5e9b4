#pragma once

#include <stdexcept>
#include <string>

namespace surrogate {

enum class ErrorCode {
  kInvalidSchema,
  kInvalidArgument,
  kMissingColumn,
  kParseError,
  kMissingIndicator,
  kEmptyInput,
  kDimensionMismatch,
  kEncodingMismatch,
  kSingleClass,
  kCorruptFile,
  kVersionMismatch,
  kMissingArtifact,
  kChecksumConflict,
  kIo,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidSchema: return "invalid-schema";
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kMissingColumn: return "missing-column";
    case ErrorCode::kParseError: return "parse-error";
    case ErrorCode::kMissingIndicator: return "missing-indicator";
    case ErrorCode::kEmptyInput: return "empty-input";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kEncodingMismatch: return "encoding-mismatch";
    case ErrorCode::kSingleClass: return "single-class";
    case ErrorCode::kCorruptFile: return "corrupt-file";
    case ErrorCode::kVersionMismatch: return "version-mismatch";
    case ErrorCode::kMissingArtifact: return "missing-artifact";
    case ErrorCode::kChecksumConflict: return "checksum-conflict";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

/// Every failure raised by the library carries a stable code so the CLI can
/// print a machine-parseable `error: <code>: <message>` line.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace surrogate
