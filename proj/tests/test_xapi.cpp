#include <doctest.h>

#include <fstream>

#include "fixtures.hpp"
#include "metal/ids.hpp"
#include "metal/store.hpp"
#include "metal/xapi_service.hpp"

using namespace metal;
using fixtures::at;
using fixtures::statement;

namespace {

ErrorCode code_of(const std::function<void()>& f, std::string* subject = nullptr) {
  try {
    f();
  } catch (const Error& e) {
    if (subject) *subject = e.subject();
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::Storage;
}

http::Request get(std::multimap<std::string, std::string> params) {
  return {"GET", "/xapi/statements", std::move(params), ""};
}

}  // namespace

TEST_CASE("insert assigns id, timestamp and stored") {
  fixtures::ManualClock clock(at("2019-03-01T12:00:00Z"));
  Store store({}, clock.clock());
  auto id = store.insert_statement(statement("L1", fixtures::kExperienced, "res:R-15"));
  CHECK(is_uuid(id));
  auto s = store.statement(id);
  REQUIRE(s);
  CHECK(s->body["stored"] == "2019-03-01T12:00:00.000Z");
  CHECK(s->body["timestamp"] == "2019-03-01T12:00:00.000Z");
  CHECK(s->body["id"] == id);
}

TEST_CASE("validation names the field path") {
  Store store;
  auto subject_of = [&](Json body) {
    std::string subject;
    CHECK(code_of([&] { store.insert_statement(body); }, &subject) == ErrorCode::Validation);
    return subject;
  };
  auto ok = statement("L1", fixtures::kExperienced, "res:R-15");
  Json no_actor = ok;
  no_actor.erase("actor");
  CHECK(subject_of(no_actor) == "actor");
  Json bad_verb = ok;
  bad_verb["verb"]["id"] = "experienced";
  CHECK(subject_of(bad_verb) == "verb.id");
  Json bad_score = ok;
  bad_score["result"] = {{"score", {{"scaled", 1.5}}}};
  CHECK(subject_of(bad_score) == "result.score.scaled");
  Json bad_ts = ok;
  bad_ts["timestamp"] = "2019-03-01";
  CHECK(subject_of(bad_ts) == "timestamp");
  Json bad_id = ok;
  bad_id["id"] = "not-a-uuid";
  CHECK(subject_of(bad_id) == "id");
  CHECK(store.statement_count() == 0);
}

TEST_CASE("timestamps beyond the skew allowance are rejected") {
  fixtures::ManualClock clock(at("2019-03-01T12:00:00Z"));
  Store store({}, clock.clock());
  CHECK_NOTHROW(store.insert_statement(statement("L1", fixtures::kExperienced, "res:a", "2019-03-01T12:01:00Z")));
  std::string subject;
  CHECK(code_of([&] { store.insert_statement(statement("L1", fixtures::kExperienced, "res:a", "2019-03-01T12:01:00.001Z")); },
                &subject) == ErrorCode::Validation);
  CHECK(subject == "timestamp");
}

TEST_CASE("identical re-insert is a no-op; different content conflicts") {
  Store store;
  auto s = statement("L1", fixtures::kExperienced, "res:R-15", "2019-03-01T09:00:00Z");
  s["id"] = "3F2504E0-4F89-41D3-9A0C-0305E82C3301";
  s["context"] = {{"extensions", {{"https://x.example/ext", {1, 2, 3}}}}};
  auto id = store.insert_statement(s);
  CHECK(id == "3f2504e0-4f89-41d3-9a0c-0305e82c3301");
  CHECK(store.insert_statement(s) == id);
  CHECK(store.statement_count() == 1);
  CHECK(store.statement(id)->body["context"] == s["context"]);  // unknown fields kept verbatim
  s["verb"]["id"] = "http://adlnet.gov/expapi/verbs/completed";
  CHECK(code_of([&] { store.insert_statement(s); }) == ErrorCode::Conflict);
}

TEST_CASE("batches are atomic and errors carry the index") {
  Store store;
  std::vector<Json> batch;
  for (int i = 0; i < 5; ++i) batch.push_back(statement("L1", fixtures::kExperienced, "res:a" + std::to_string(i)));
  batch[3].erase("verb");
  std::string subject;
  CHECK(code_of([&] { store.insert_statements(batch); }, &subject) == ErrorCode::Validation);
  CHECK(subject == "[3].verb");
  CHECK(store.statement_count() == 0);

  batch[3] = statement("L1", fixtures::kExperienced, "res:a3");
  CHECK(store.insert_statements(batch).size() == 5);
  CHECK(store.statement_count() == 5);
}

TEST_CASE("duplicate ids inside one batch must agree") {
  Store store;
  auto a = statement("L1", fixtures::kExperienced, "res:x", "2019-03-01T09:00:00Z");
  a["id"] = make_uuid();
  auto b = a;
  CHECK(store.insert_statements({a, b}).size() == 2);
  CHECK(store.statement_count() == 1);
  auto c = a;
  c["id"] = make_uuid();
  auto d = c;
  d["object"]["id"] = "res:y";
  CHECK(code_of([&] { store.insert_statements({c, d}); }) == ErrorCode::Conflict);
}

TEST_CASE("voiding hides the target from queries but not from by-id reads") {
  Store store;
  auto target = store.insert_statement(statement("L1", fixtures::kExperienced, "res:R-15"));
  Json voiding = statement("T1", std::string(kVoidedVerb), "");
  voiding["object"] = {{"objectType", "StatementRef"}, {"id", target}};
  auto vid = store.insert_statement(voiding);

  auto all = store.query_statements({});
  REQUIRE(all.statements.size() == 1);
  CHECK(all.statements[0].id == vid);
  CHECK(store.statement(target).has_value());

  StatementFilter by_verb;
  by_verb.verb = std::string(kVoidedVerb);
  CHECK(store.query_statements(by_verb).statements.size() == 1);

  Json bad = voiding;
  bad["object"] = {{"objectType", "Activity"}, {"id", "res:R-15"}};
  CHECK(code_of([&] { store.insert_statement(bad); }) == ErrorCode::Validation);
  Json missing = voiding;
  missing["object"]["id"] = make_uuid();
  CHECK(code_of([&] { store.insert_statement(missing); }) == ErrorCode::Validation);
}

TEST_CASE("since is exclusive, until inclusive; pages tile the result") {
  fixtures::ManualClock clock(at("2019-03-01T00:00:00Z"));
  Store store({}, clock.clock());
  std::vector<std::string> ids;
  for (int i = 0; i < 10; ++i) {
    clock.advance(Millis{1000});
    ids.push_back(store.insert_statement(statement("L1", fixtures::kExperienced, "res:a")));
  }
  StatementFilter f;
  f.since = at("2019-03-01T00:00:03Z");
  f.until = at("2019-03-01T00:00:07Z");
  auto page = store.query_statements(f);
  REQUIRE(page.statements.size() == 4);
  CHECK(page.statements.front().id == ids[6]);
  CHECK(page.statements.back().id == ids[3]);

  StatementFilter paged;
  paged.limit = 3;
  std::vector<std::string> seen;
  for (int guard = 0; guard < 10; ++guard) {
    auto p = store.query_statements(paged);
    for (const auto& s : p.statements) seen.push_back(s.id);
    if (!p.more) break;
    paged.cursor = p.more;
  }
  CHECK(seen == std::vector<std::string>(ids.rbegin(), ids.rend()));

  StatementFilter garbage;
  garbage.cursor = "zz";
  CHECK(code_of([&] { store.query_statements(garbage); }) == ErrorCode::BadFilter);
}

TEST_CASE("statements persist and reload") {
  fixtures::TempDir dir;
  std::string id;
  {
    Store store(dir.path);
    id = store.insert_statement(statement("L1", fixtures::kExperienced, "res:R-15"));
  }
  Store reopened(dir.path);
  REQUIRE(reopened.statement(id));
  CHECK(reopened.statement_count() == 1);
}

TEST_CASE("wire: PUT, POST and GET") {
  Store store;
  XapiService svc(store);
  auto id = make_uuid();
  auto body = statement("L1", fixtures::kExperienced, "res:R-15", "2019-03-01T09:00:00Z");

  auto put = svc.write({"PUT", "/xapi/statements", {{"statementId", id}}, body.dump()});
  CHECK(put.status == 204);
  Json mismatched = body;
  mismatched["id"] = make_uuid();
  CHECK(svc.write({"PUT", "/xapi/statements", {{"statementId", id}}, mismatched.dump()}).status == 400);
  CHECK(svc.write({"PUT", "/xapi/statements", {}, body.dump()}).status == 400);

  Json batch = Json::array({body, body});
  batch[1]["object"]["id"] = "res:R-42";
  auto post = svc.write({"POST", "/xapi/statements", {}, batch.dump()});
  CHECK(post.status == 200);
  CHECK(post.json().size() == 2);

  batch[1].erase("actor");
  auto bad = svc.write({"POST", "/xapi/statements", {}, batch.dump()});
  CHECK(bad.status == 400);
  CHECK(bad.json()["index"] == 1);
  CHECK(bad.json()["field"] == "actor");

  Json huge = Json::array();
  for (std::size_t i = 0; i <= kMaxBatch; ++i) huge.push_back(body);
  CHECK(svc.write({"POST", "/xapi/statements", {}, huge.dump()}).status == 413);

  auto one = svc.read(get({{"statementId", id}}));
  CHECK(one.status == 200);
  CHECK(one.json()["id"] == id);
  CHECK(svc.read(get({{"statementId", id}, {"verb", "x"}})).json()["error"] == "BAD_FILTER");
  CHECK(svc.read(get({{"statementId", make_uuid()}})).status == 404);

  auto list = svc.read(get({{"agent", R"({"account":{"homePage":"https://school.example","name":"L1"}})"}, {"limit", "2"}}));
  CHECK(list.status == 200);
  CHECK(list.json()["statements"].size() == 2);
  CHECK(list.json().contains("more"));
  CHECK(svc.read(get({{"since", "last week"}})).status == 400);
  CHECK(svc.read(get({{"limit", "0"}})).status == 400);
}
