#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "metal/error.hpp"

namespace metal::http {

/// Transport-independent request; the httplib adapter and tests both
/// build these.
struct Request {
  std::string method;
  std::string path;
  std::multimap<std::string, std::string> params;
  std::string body;

  std::optional<std::string> param(std::string_view name) const;
  bool has(std::string_view name) const { return params.contains(std::string(name)); }
};

struct Response {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";

  nlohmann::json json() const { return nlohmann::json::parse(body); }
};

Response json_response(int status, const nlohmann::json& body);
int status_for(ErrorCode code);
/// `{"error": CODE, "subject": ..., "message": ...}` plus any `extra` fields.
Response error_response(const Error& e, const nlohmann::json& extra = nlohmann::json::object());

}  // namespace metal::http
