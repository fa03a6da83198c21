#include "metal/http.hpp"

namespace metal::http {

std::optional<std::string> Request::param(std::string_view name) const {
  auto it = params.find(std::string(name));
  if (it == params.end()) return std::nullopt;
  return it->second;
}

Response json_response(int status, const nlohmann::json& body) {
  return Response{status, body.dump(), "application/json"};
}

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Validation:
    case ErrorCode::BadFilter:
    case ErrorCode::DanglingReference:
    case ErrorCode::MalformedCsv:
    case ErrorCode::MalformedRow:
    case ErrorCode::NonMonotonicOnsets:
    case ErrorCode::UnknownEntityType:
    case ErrorCode::DegenerateGroups:
    case ErrorCode::ZeroVariance:
      return 400;
    case ErrorCode::UnknownLearner:
    case ErrorCode::UnknownResource:
    case ErrorCode::UnknownSkill:
    case ErrorCode::UnknownRecommendation:
      return 404;
    case ErrorCode::Conflict:
    case ErrorCode::Duplicate:
    case ErrorCode::IllegalTransition:
      return 409;
    case ErrorCode::PayloadTooLarge:
      return 413;
    case ErrorCode::LimitExceeded:
      return 422;
    case ErrorCode::Storage:
      return 500;
  }
  return 500;
}

Response error_response(const Error& e, const nlohmann::json& extra) {
  nlohmann::json body = {{"error", to_string(e.code())}, {"subject", e.subject()}, {"message", e.what()}};
  for (const auto& [k, v] : extra.items()) body[k] = v;
  return json_response(status_for(e.code()), body);
}

}  // namespace metal::http
