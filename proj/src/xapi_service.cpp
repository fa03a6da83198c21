#include "metal/xapi_service.hpp"

#include <charconv>

#include "metal/ids.hpp"

namespace metal {

using http::Request;
using http::Response;

namespace {

// Splits a batch error subject `[i].field` into index and field path.
Response batch_error(const Error& e) {
  const std::string& s = e.subject();
  nlohmann::json extra = nlohmann::json::object();
  if (s.size() > 2 && s[0] == '[') {
    auto close = s.find("].");
    if (close != std::string::npos) {
      extra["index"] = std::stoul(s.substr(1, close - 1));
      extra["field"] = s.substr(close + 2);
    }
  }
  return http::error_response(e, extra);
}

std::optional<Instant> instant_param(const Request& req, const char* name) {
  auto v = req.param(name);
  if (!v) return std::nullopt;
  auto t = parse_instant(*v);
  if (!t) throw Error(ErrorCode::BadFilter, name, std::string(name) + ": malformed instant '" + *v + "'");
  return t;
}

}  // namespace

StatementFilter XapiService::parse_filter(const Request& req) {
  StatementFilter f;
  if (auto a = req.param("agent")) {
    f.agent = parse_agent_filter(*a);
    if (!f.agent) throw Error(ErrorCode::BadFilter, "agent", "agent: malformed agent");
  }
  f.verb = req.param("verb");
  f.activity = req.param("activity");
  f.since = instant_param(req, "since");
  f.until = instant_param(req, "until");
  if (auto l = req.param("limit")) {
    std::size_t n = 0;
    auto [p, ec] = std::from_chars(l->data(), l->data() + l->size(), n);
    if (ec != std::errc{} || p != l->data() + l->size() || n < 1)
      throw Error(ErrorCode::BadFilter, "limit", "limit: must be an integer >= 1");
    f.limit = n;
  }
  f.cursor = req.param("cursor");
  return f;
}

Response XapiService::write(const Request& req) {
  nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
  if (body.is_discarded())
    return http::error_response(Error(ErrorCode::Validation, "$", "body is not valid JSON"));
  try {
    if (req.method == "PUT") {
      auto id = req.param("statementId");
      if (!id) throw Error(ErrorCode::Validation, "statementId", "statementId query parameter required");
      if (!is_uuid(*id)) throw Error(ErrorCode::Validation, "statementId", "statementId must be a UUID");
      if (!body.is_object()) throw Error(ErrorCode::Validation, "$", "PUT takes a single statement");
      if (auto it = body.find("id"); it != body.end()) {
        if (!it->is_string() || to_lower(it->get<std::string>()) != to_lower(*id))
          throw Error(ErrorCode::Validation, "id", "id: does not match statementId");
      }
      body["id"] = to_lower(*id);
      store_.insert_statement(body);
      return Response{204, "", "application/json"};
    }
    if (body.is_object()) {
      auto id = store_.insert_statement(body);
      return http::json_response(200, nlohmann::json::array({id}));
    }
    if (!body.is_array()) throw Error(ErrorCode::Validation, "$", "body must be a statement or an array");
    if (body.size() > kMaxBatch)
      throw Error(ErrorCode::PayloadTooLarge, "$",
                  "batch of " + std::to_string(body.size()) + " exceeds " + std::to_string(kMaxBatch));
    std::vector<Json> batch(body.begin(), body.end());
    return http::json_response(200, store_.insert_statements(batch));
  } catch (const Error& e) {
    return batch_error(e);
  }
}

Response XapiService::read(const Request& req) {
  try {
    if (auto id = req.param("statementId")) {
      for (const auto& [k, v] : req.params)
        if (k != "statementId")
          throw Error(ErrorCode::BadFilter, k, "statementId cannot be combined with '" + k + "'");
      auto s = store_.statement(*id);
      if (!s)
        return http::json_response(404, {{"error", "NOT_FOUND"}, {"subject", *id}, {"message", "no such statement"}});
      return http::json_response(200, s->body);
    }
    auto page = store_.query_statements(parse_filter(req));
    nlohmann::json list = nlohmann::json::array();
    for (const auto& s : page.statements) list.push_back(s.body);
    nlohmann::json out = {{"statements", list}};
    if (page.more) out["more"] = *page.more;
    return http::json_response(200, out);
  } catch (const Error& e) {
    return http::error_response(e);
  }
}

}  // namespace metal
