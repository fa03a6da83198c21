#include "metal/error.hpp"

namespace metal {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Validation: return "VALIDATION";
    case ErrorCode::Conflict: return "CONFLICT";
    case ErrorCode::BadFilter: return "BAD_FILTER";
    case ErrorCode::DanglingReference: return "DANGLING_REFERENCE";
    case ErrorCode::Duplicate: return "DUPLICATE";
    case ErrorCode::UnknownLearner: return "UNKNOWN_LEARNER";
    case ErrorCode::UnknownResource: return "UNKNOWN_RESOURCE";
    case ErrorCode::UnknownEntityType: return "UNKNOWN_ENTITY_TYPE";
    case ErrorCode::UnknownSkill: return "UNKNOWN_SKILL";
    case ErrorCode::UnknownRecommendation: return "UNKNOWN_RECOMMENDATION";
    case ErrorCode::IllegalTransition: return "ILLEGAL_TRANSITION";
    case ErrorCode::LimitExceeded: return "LIMIT_EXCEEDED";
    case ErrorCode::MalformedCsv: return "MALFORMED_CSV";
    case ErrorCode::MalformedRow: return "MALFORMED_ROW";
    case ErrorCode::NonMonotonicOnsets: return "NON_MONOTONIC_ONSETS";
    case ErrorCode::DegenerateGroups: return "DEGENERATE_GROUPS";
    case ErrorCode::ZeroVariance: return "ZERO_VARIANCE";
    case ErrorCode::PayloadTooLarge: return "PAYLOAD_TOO_LARGE";
    case ErrorCode::Storage: return "STORAGE";
  }
  return "UNKNOWN";
}

}  // namespace metal
