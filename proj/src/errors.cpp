#include "calibguide/errors.hpp"

namespace calibguide {

const char* code_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::BehindCamera: return "BEHIND_CAMERA";
    case ErrorCode::DegenerateRays: return "DEGENERATE_RAYS";
    case ErrorCode::SingularInformation: return "SINGULAR_INFORMATION";
    case ErrorCode::NoFeasibleCandidate: return "NO_FEASIBLE_CANDIDATE";
    case ErrorCode::ConstraintUnsatisfiable: return "CONSTRAINT_UNSATISFIABLE";
    case ErrorCode::InsufficientPoints: return "INSUFFICIENT_POINTS";
    case ErrorCode::DegenerateConfiguration: return "DEGENERATE_CONFIGURATION";
    case ErrorCode::DivergedOptimization: return "DIVERGED_OPTIMIZATION";
    case ErrorCode::UndefinedError: return "UNDEFINED_ERROR";
    case ErrorCode::NotVisible: return "NOT_VISIBLE";
    case ErrorCode::InvalidConfig: return "INVALID_CONFIG";
    case ErrorCode::SessionNotFound: return "SESSION_NOT_FOUND";
    case ErrorCode::InsufficientViews: return "INSUFFICIENT_VIEWS";
  }
  return "UNKNOWN";
}

}  // namespace calibguide
