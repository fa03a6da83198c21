#include "metal/statement.hpp"

#include "metal/error.hpp"
#include "metal/ids.hpp"

namespace metal {

namespace {

[[noreturn]] void invalid(const std::string& path, const std::string& why) {
  throw Error(ErrorCode::Validation, path, path + ": " + why);
}

const Json& require(const Json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) invalid(path + key, "required field missing");
  return *it;
}

std::string require_string(const Json& obj, const char* key, const std::string& path) {
  const Json& v = require(obj, key, path);
  if (!v.is_string() || v.get_ref<const std::string&>().empty())
    invalid(path + key, "must be a non-empty string");
  return v.get<std::string>();
}

}  // namespace

bool Agent::matches(const Agent& f) const {
  if (!f.mbox.empty() && f.mbox != mbox) return false;
  if (!f.account_name.empty() && (f.account_name != account_name || f.home_page != home_page))
    return false;
  return !f.mbox.empty() || !f.account_name.empty();
}

std::optional<Agent> parse_agent(const Json& v) {
  if (!v.is_object()) return std::nullopt;
  Agent a;
  if (auto it = v.find("mbox"); it != v.end()) {
    if (!it->is_string()) return std::nullopt;
    a.mbox = it->get<std::string>();
    if (a.mbox.rfind("mailto:", 0) != 0 || a.mbox.size() <= 7) return std::nullopt;
  }
  if (auto it = v.find("account"); it != v.end()) {
    if (!it->is_object()) return std::nullopt;
    auto hp = it->find("homePage");
    auto nm = it->find("name");
    if (hp == it->end() || nm == it->end() || !hp->is_string() || !nm->is_string())
      return std::nullopt;
    a.home_page = hp->get<std::string>();
    a.account_name = nm->get<std::string>();
    if (a.account_name.empty() || !is_absolute_iri(a.home_page)) return std::nullopt;
  }
  if (a.mbox.empty() && a.account_name.empty()) return std::nullopt;
  return a;
}

std::optional<Agent> parse_agent_filter(std::string_view text) {
  if (text.rfind("mailto:", 0) == 0) {
    Agent a;
    a.mbox = std::string(text);
    return a;
  }
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded()) return std::nullopt;
  return parse_agent(j);
}

Json strip_server_fields(const Json& body) {
  Json out = body;
  out.erase("stored");
  out.erase("authority");
  return out;
}

Json Statement::content() const { return strip_server_fields(body); }

Statement parse_statement(const Json& candidate) {
  if (!candidate.is_object()) invalid("$", "statement must be an object");
  Statement s;
  s.body = candidate;

  if (auto it = candidate.find("id"); it != candidate.end() && !it->is_null()) {
    if (!it->is_string() || !is_uuid(it->get_ref<const std::string&>()))
      invalid("id", "must be a UUID");
    s.id = to_lower(it->get<std::string>());
    s.body["id"] = s.id;
  }

  const Json& actor = require(candidate, "actor", "");
  auto agent = parse_agent(actor);
  if (!agent) invalid("actor", "needs a mailto: mbox or an account {homePage, name}");
  s.actor = *agent;

  const Json& verb = require(candidate, "verb", "");
  if (!verb.is_object()) invalid("verb", "must be an object");
  s.verb_id = require_string(verb, "id", "verb.");
  if (!is_absolute_iri(s.verb_id)) invalid("verb.id", "must be an absolute IRI");
  if (auto d = verb.find("display"); d != verb.end() && !d->is_object())
    invalid("verb.display", "must be a language map");

  const Json& object = require(candidate, "object", "");
  if (!object.is_object()) invalid("object", "must be an object");
  std::string type = "Activity";
  if (auto t = object.find("objectType"); t != object.end()) {
    if (!t->is_string()) invalid("object.objectType", "must be a string");
    type = t->get<std::string>();
  }
  if (type == "StatementRef") {
    s.object.statement_ref = true;
    s.object.id = require_string(object, "id", "object.");
    if (!is_uuid(s.object.id)) invalid("object.id", "StatementRef target must be a UUID");
    s.object.id = to_lower(s.object.id);
    s.body["object"]["id"] = s.object.id;
  } else if (type == "Activity") {
    s.object.id = require_string(object, "id", "object.");
    if (!is_absolute_iri(s.object.id)) invalid("object.id", "must be an absolute IRI");
  } else {
    invalid("object.objectType", "unsupported object type '" + type + "'");
  }
  if (s.is_voiding() && !s.object.statement_ref)
    invalid("object", "voiding statements must target a StatementRef");

  if (auto it = candidate.find("timestamp"); it != candidate.end()) {
    if (!it->is_string()) invalid("timestamp", "must be an ISO 8601 string");
    auto t = parse_instant(it->get_ref<const std::string&>());
    if (!t) invalid("timestamp", "must be ISO 8601 with an explicit offset");
    s.timestamp = *t;
  }

  if (auto it = candidate.find("result"); it != candidate.end()) {
    if (!it->is_object()) invalid("result", "must be an object");
    if (auto sc = it->find("score"); sc != it->end()) {
      if (!sc->is_object()) invalid("result.score", "must be an object");
      if (auto sd = sc->find("scaled"); sd != sc->end()) {
        if (!sd->is_number() || sd->get<double>() < 0.0 || sd->get<double>() > 1.0)
          invalid("result.score.scaled", "must be a number in [0,1]");
      }
    }
    if (auto su = it->find("success"); su != it->end() && !su->is_boolean())
      invalid("result.success", "must be a boolean");
    if (auto du = it->find("duration"); du != it->end() &&
                                         (!du->is_string() || du->get<std::string>().empty() ||
                                          du->get<std::string>()[0] != 'P'))
      invalid("result.duration", "must be an ISO 8601 duration");
  }
  return s;
}

}  // namespace metal
