#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mcs {

enum class ErrorCode {
  kInvalidConfig,
  kFileNotFound,
  kSchemaMismatch,
  kEmptyPool,
  kOutOfBbox,
  kEpisodeDone,
  kInvalidAssignment,
  kUnknownPreset,
  kSearchTooLarge,
  kProtocol,
  kEmptyResults,
  kEnvUnreachable,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidConfig: return "INVALID_CONFIG";
    case ErrorCode::kFileNotFound: return "FILE_NOT_FOUND";
    case ErrorCode::kSchemaMismatch: return "SCHEMA_MISMATCH";
    case ErrorCode::kEmptyPool: return "EMPTY_POOL";
    case ErrorCode::kOutOfBbox: return "OUT_OF_BBOX";
    case ErrorCode::kEpisodeDone: return "EPISODE_DONE";
    case ErrorCode::kInvalidAssignment: return "INVALID_ASSIGNMENT";
    case ErrorCode::kUnknownPreset: return "UNKNOWN_PRESET";
    case ErrorCode::kSearchTooLarge: return "SEARCH_TOO_LARGE";
    case ErrorCode::kProtocol: return "PROTOCOL";
    case ErrorCode::kEmptyResults: return "EMPTY_RESULTS";
    case ErrorCode::kEnvUnreachable: return "ENV_UNREACHABLE";
  }
  return "UNKNOWN";
}

/// Exception carrying a stable, wire-visible error code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code), detail_(detail) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace mcs
