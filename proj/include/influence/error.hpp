#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace influence {

enum class ErrorCode {
  // ingest
  FileNotFound,
  EncodingError,
  EmptyAfterStrip,
  SelectorOutOfRange,
  MarkerNotFound,
  InvalidManifest,
  // embedding store
  BadMagic,
  VersionMismatch,
  CorruptRecord,
  NormViolation,
  DimMismatch,
  EmptySegment,
  MissingEmbeddings,
  // general
  InvalidArgument,
  InvalidConfig,
  IoError,
};

std::string_view to_string(ErrorCode code);

// Process exit status for the CLI: 1 usage/config, 2 data, 3 I/O.
int exit_code_for(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace influence
