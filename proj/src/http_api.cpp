#include "metal/http_api.hpp"

#include <sstream>

#include <httplib.h>

#include "metal/indicators.hpp"

namespace metal {

using nlohmann::json;

namespace {

std::vector<std::string> segments(const std::string& path) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(path);
  while (std::getline(in, cur, '/'))
    if (!cur.empty()) out.push_back(cur);
  return out;
}

// Accepts an instant or a bare date (its midnight UTC).
std::optional<Instant> parse_bound(const std::string& text) {
  if (auto t = parse_instant(text)) return t;
  if (auto d = parse_date(text); d && !d->year_only) return start_of_day(*d);
  return std::nullopt;
}

json parse_body(const std::string& body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::Validation, "$", "body must be a JSON object");
  return j;
}

http::Response not_found(const http::Request& req) {
  return http::json_response(404, {{"error", "NOT_FOUND"}, {"subject", req.path}, {"message", "no such route"}});
}

http::Response method_not_allowed(const http::Request& req) {
  return http::json_response(405, {{"error", "METHOD_NOT_ALLOWED"}, {"subject", req.method}, {"message", "method not allowed"}});
}

}  // namespace

Api::Api(Store& store, recommend::RecommendationBook& book, RunConfig config, Clock clock)
    : store_(store), book_(book), config_(std::move(config)), clock_(std::move(clock)), xapi_(store),
      roster_(store) {}

CivilDate Api::reference() const { return config_.reference ? *config_.reference : date_of(clock_()); }

http::Response Api::dispatch(const http::Request& req) {
  const auto seg = segments(req.path);
  const auto& m = req.method;
  try {
    if (seg.size() == 2 && seg[0] == "xapi" && seg[1] == "statements") {
      if (m == "GET") return xapi_.read(req);
      if (m == "PUT" || m == "POST") return xapi_.write(req);
      return method_not_allowed(req);
    }
    if (seg.size() == 2 && seg[0] == "roster") {
      if (seg[1] == "import") return m == "POST" ? roster_.import(req) : method_not_allowed(req);
      if (seg[1] == "export") return m == "POST" ? roster_.export_bundle(req) : method_not_allowed(req);
      return m == "GET" ? roster_.read(seg[1], req) : method_not_allowed(req);
    }
    if (seg.size() == 3 && seg[0] == "indicators" && (seg[1] == "learners" || seg[1] == "classes"))
      return m == "GET" ? indicators(seg[1], seg[2], req) : method_not_allowed(req);
    if (seg.size() == 1 && seg[0] == "recommendations")
      return m == "GET" ? list_recommendations(req) : method_not_allowed(req);
    if (seg.size() == 2 && seg[0] == "recommendations" && seg[1] == "propose")
      return m == "POST" ? propose(req) : method_not_allowed(req);
    if (seg.size() == 3 && seg[0] == "recommendations" && seg[2] == "decision")
      return m == "POST" ? decide(seg[1], req) : method_not_allowed(req);
    if (seg.size() == 3 && seg[0] == "learners" && seg[2] == "delivered")
      return m == "GET" ? delivered(seg[1]) : method_not_allowed(req);
    return not_found(req);
  } catch (const Error& e) {
    return http::error_response(e);
  } catch (const json::exception& e) {
    return http::error_response(Error(ErrorCode::Validation, "$", e.what()));
  }
}

http::Response Api::indicators(const std::string& kind, const std::string& id, const http::Request& req) {
  indicators::IndicatorConfig cfg;
  cfg.session_gap = config_.session_gap;
  if (auto b = req.param("bucket")) {
    auto d = parse_duration(*b);
    if (!d || d->count() <= 0) throw Error(ErrorCode::BadFilter, "bucket", "bucket must be a positive duration");
    cfg.bucket = *d;
  }
  // Default window: the 30 days ending at the next midnight.
  Instant to = start_of_day(date_of(clock_())) + kDay;
  if (auto t = req.param("to")) {
    auto v = parse_bound(*t);
    if (!v) throw Error(ErrorCode::BadFilter, "to", "to must be an ISO 8601 instant or date");
    to = *v;
  }
  Instant from = to - 30 * kDay;
  if (auto f = req.param("from")) {
    auto v = parse_bound(*f);
    if (!v) throw Error(ErrorCode::BadFilter, "from", "from must be an ISO 8601 instant or date");
    from = *v;
  }
  if (from >= to) throw Error(ErrorCode::BadFilter, "from", "from must precede to");
  auto data = indicators::IndicatorData::from(store_);
  indicators::Window w{from, to};
  if (kind == "learners") return http::json_response(200, indicators::learner_report(data, id, w, cfg));
  return http::json_response(200, indicators::class_report(data, id, w, cfg));
}

http::Response Api::list_recommendations(const http::Request& req) {
  std::optional<recommend::State> state;
  if (auto s = req.param("state")) {
    state = recommend::parse_state(*s);
    if (!state) throw Error(ErrorCode::BadFilter, "state", "unknown state '" + *s + "'");
  }
  json items = json::array();
  for (const auto& r : book_.list(req.param("learner"), state)) items.push_back(recommend::to_json(r));
  return http::json_response(200, {{"recommendations", items}});
}

http::Response Api::decide(const std::string& id, const http::Request& req) {
  json body = parse_body(req.body);
  recommend::ReviewRequest review;
  auto decision = recommend::parse_decision(body.value("decision", std::string()));
  if (!decision) throw Error(ErrorCode::Validation, "decision", "decision must be approve, reject, amend or deliver");
  review.decision = *decision;
  if (body.contains("rating") && !body["rating"].is_null()) {
    if (!body["rating"].is_number_integer()) throw Error(ErrorCode::Validation, "rating", "rating must be an integer");
    review.rating = body["rating"].get<int>();
  }
  if (body.contains("note") && body["note"].is_string()) review.note = body["note"].get<std::string>();
  if (body.contains("consequent")) {
    auto item = mining::parse_item(body["consequent"].get<std::string>());
    if (!item) throw Error(ErrorCode::Validation, "consequent", "consequent must be id(...) or attr(k=v)");
    review.amended_consequent = item;
  }
  if (body.contains("resources")) review.amended_resources = body["resources"].get<std::vector<std::string>>();
  try {
    return http::json_response(200, recommend::to_json(book_.review(id, review)));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::IllegalTransition) return http::error_response(e, {{"state", e.subject()}});
    throw;
  }
}

http::Response Api::delivered(const std::string& learner) {
  json items = json::array();
  for (const auto& r : book_.delivered(learner)) items.push_back(recommend::to_json(r));
  return http::json_response(200, {{"learner", learner}, {"recommendations", items}});
}

http::Response Api::propose(const http::Request& req) {
  json body = parse_body(req.body);
  if (!body.contains("learner") || !body["learner"].is_string())
    throw Error(ErrorCode::Validation, "learner", "learner id required");
  const std::string learner = body["learner"].get<std::string>();
  const CivilDate ref = reference();
  const RosterTables roster = store_.roster();
  const auto context = resolve_learner_context(roster, learner, ref);

  auto input = mining::mining_input(roster, store_.activity_events(), ref, config_.session_gap);
  auto patterns = mining::mine_patterns(input.db, input.contexts, config_.miner);
  auto rules = recommend::derive_rules(patterns, input.db, input.contexts, config_.min_confidence);

  const Instant since = clock_() - config_.lookback;
  std::vector<mining::Session> recent;
  if (auto it = input.db.sessions.find(learner); it != input.db.sessions.end())
    for (const auto& s : it->second)
      if (!s.empty() && s.back().instant >= since) recent.push_back(s);

  json items = json::array();
  for (const auto& r : book_.propose(learner, rules, context, recent, input.db.attributes))
    items.push_back(recommend::to_json(r));
  return http::json_response(200, {{"recommendations", items}});
}

void mount(httplib::Server& server, Api& api, const std::string& token) {
  auto handler = [&api, token](const httplib::Request& in, httplib::Response& out) {
    if (!token.empty() && in.get_header_value("Authorization") != "Bearer " + token) {
      out.status = 401;
      out.set_content(R"({"error":"UNAUTHORIZED","subject":"Authorization","message":"bearer token required"})",
                      "application/json");
      return;
    }
    http::Request req{in.method, in.path, {}, in.body};
    for (const auto& [k, v] : in.params) req.params.emplace(k, v);
    auto res = api.dispatch(req);
    out.status = res.status;
    out.set_content(res.body, res.content_type);
  };
  const char* pattern = R"(/.*)";
  server.Get(pattern, handler);
  server.Post(pattern, handler);
  server.Put(pattern, handler);
}

}  // namespace metal
