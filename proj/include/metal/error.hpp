#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace metal {

enum class ErrorCode {
  Validation,
  Conflict,
  BadFilter,
  DanglingReference,
  Duplicate,
  UnknownLearner,
  UnknownResource,
  UnknownEntityType,
  UnknownSkill,
  UnknownRecommendation,
  IllegalTransition,
  LimitExceeded,
  MalformedCsv,
  MalformedRow,
  NonMonotonicOnsets,
  DegenerateGroups,
  ZeroVariance,
  PayloadTooLarge,
  Storage,
};

std::string_view to_string(ErrorCode code);

// Domain error carrying a machine-readable code. `subject` names the field
// path, missing id or offending state depending on the code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string subject, const std::string& message)
      : std::runtime_error(message), code_(code), subject_(std::move(subject)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& subject() const noexcept { return subject_; }

 private:
  ErrorCode code_;
  std::string subject_;
};

}  // namespace metal
