#pragma once

#include <stdexcept>
#include <string>

namespace calibguide {

enum class ErrorCode {
  BehindCamera,
  DegenerateRays,
  SingularInformation,
  NoFeasibleCandidate,
  ConstraintUnsatisfiable,
  InsufficientPoints,
  DegenerateConfiguration,
  DivergedOptimization,
  UndefinedError,
  NotVisible,
  InvalidConfig,
  SessionNotFound,
  InsufficientViews,
};

/// Stable machine-readable code string, e.g. "NOT_VISIBLE".
const char* code_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  const char* code_str() const noexcept { return code_string(code_); }

 private:
  ErrorCode code_;
};

}  // namespace calibguide
