#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ragbreaker {

enum class ErrorCode {
  MissingPath,
  MalformedRecord,
  InvalidChunkParams,
  InvalidConfig,
  InvalidArgument,
  VectorFileMissing,
  DimensionMismatch,
  DuplicateChunkId,
  UnknownChunkId,
  FingerprintMismatch,
  EmptyContext,
  UnknownTemplate,
  Timeout,
  HttpError,
  MalformedResponse,
  EmptyIndex,
  EmptyQuestion,
  DuplicateSpecId,
  UnknownSpecId,
  AlreadyRetracted,
  EmptyField,
  EmptyText,
  ZeroCleanScore,
  EmptyResults,
  Unauthorized,
  NotFound,
  PortInUse,
  Internal,
};

std::string_view error_code_name(ErrorCode code);

// HTTP status used by the service for this code; the CLI derives its exit
// code from it (4xx -> 1, everything else -> 2).
int http_status(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  // Only meaningful for ErrorCode::HttpError.
  int upstream_status() const noexcept { return upstream_status_; }

  static Error http(int status, const std::string& message) {
    Error e(ErrorCode::HttpError, message);
    e.upstream_status_ = status;
    return e;
  }

 private:
  ErrorCode code_;
  int upstream_status_ = 0;
};

}  // namespace ragbreaker
