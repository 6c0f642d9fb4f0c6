#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace stancebench {

enum class ErrorCode {
  // corpus
  MissingColumn,
  UnknownAnnotation,
  EmptySentence,
  MalformedJson,
  MissingConclusion,
  UnknownStance,
  SampleTooLarge,
  Io,
  // prompt_forge
  MissingTopicSpec,
  UnsupportedKind,
  // model_gateway
  Timeout,
  HttpError,
  RateLimited,
  CacheMissInReplayOnlyMode,
  // voting
  AllUnparsed,
  // eval_metrics
  LengthMismatch,
  EmptyMatrix,
  // orchestrator / report
  InvalidConfig,
  MissingData,
};

std::string_view to_string(ErrorCode code);

/// Broad failure class, used by the CLI to pick an exit status.
enum class ErrorDomain { Data, Gateway };

ErrorDomain domain_of(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Gateway failures carry the HTTP status when one was received (0 otherwise).
class GatewayError : public Error {
 public:
  GatewayError(ErrorCode code, const std::string& message, int status = 0)
      : Error(code, message), status_(status) {}

  int status() const noexcept { return status_; }

 private:
  int status_;
};

}  // namespace stancebench
