#include "influence/error.hpp"

namespace influence {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::EncodingError: return "EncodingError";
    case ErrorCode::EmptyAfterStrip: return "EmptyAfterStrip";
    case ErrorCode::SelectorOutOfRange: return "SelectorOutOfRange";
    case ErrorCode::MarkerNotFound: return "MarkerNotFound";
    case ErrorCode::InvalidManifest: return "InvalidManifest";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::CorruptRecord: return "CorruptRecord";
    case ErrorCode::NormViolation: return "NormViolation";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::EmptySegment: return "EmptySegment";
    case ErrorCode::MissingEmbeddings: return "MissingEmbeddings";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidConfig:
      return 1;
    case ErrorCode::IoError:
      return 3;
    default:
      return 2;
  }
}

}  // namespace influence
