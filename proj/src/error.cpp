#include "ragbreaker/error.hpp"

namespace ragbreaker {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingPath: return "MissingPath";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::InvalidChunkParams: return "InvalidChunkParams";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::VectorFileMissing: return "VectorFileMissing";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DuplicateChunkId: return "DuplicateChunkId";
    case ErrorCode::UnknownChunkId: return "UnknownChunkId";
    case ErrorCode::FingerprintMismatch: return "FingerprintMismatch";
    case ErrorCode::EmptyContext: return "EmptyContext";
    case ErrorCode::UnknownTemplate: return "UnknownTemplate";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::HttpError: return "HttpError";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::EmptyIndex: return "EmptyIndex";
    case ErrorCode::EmptyQuestion: return "EmptyQuestion";
    case ErrorCode::DuplicateSpecId: return "DuplicateSpecId";
    case ErrorCode::UnknownSpecId: return "UnknownSpecId";
    case ErrorCode::AlreadyRetracted: return "AlreadyRetracted";
    case ErrorCode::EmptyField: return "EmptyField";
    case ErrorCode::EmptyText: return "EmptyText";
    case ErrorCode::ZeroCleanScore: return "ZeroCleanScore";
    case ErrorCode::EmptyResults: return "EmptyResults";
    case ErrorCode::Unauthorized: return "Unauthorized";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::PortInUse: return "PortInUse";
    case ErrorCode::Internal: return "Internal";
  }
  return "Internal";
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::Unauthorized:
      return 401;
    case ErrorCode::UnknownChunkId:
    case ErrorCode::UnknownSpecId:
    case ErrorCode::NotFound:
      return 404;
    case ErrorCode::DuplicateSpecId:
    case ErrorCode::DuplicateChunkId:
    case ErrorCode::AlreadyRetracted:
      return 409;
    case ErrorCode::MalformedRecord:
    case ErrorCode::InvalidChunkParams:
    case ErrorCode::InvalidConfig:
    case ErrorCode::InvalidArgument:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::FingerprintMismatch:
    case ErrorCode::EmptyContext:
    case ErrorCode::UnknownTemplate:
    case ErrorCode::EmptyIndex:
    case ErrorCode::EmptyQuestion:
    case ErrorCode::EmptyField:
    case ErrorCode::EmptyText:
    case ErrorCode::ZeroCleanScore:
    case ErrorCode::EmptyResults:
      return 400;
    case ErrorCode::Timeout:
      return 504;
    case ErrorCode::HttpError:
    case ErrorCode::MalformedResponse:
      return 502;
    case ErrorCode::MissingPath:
    case ErrorCode::VectorFileMissing:
    case ErrorCode::PortInUse:
    case ErrorCode::Internal:
      return 500;
  }
  return 500;
}

}  // namespace ragbreaker
