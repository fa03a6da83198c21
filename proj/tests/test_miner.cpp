#include <doctest.h>

#include <algorithm>
#include <random>

#include "fixtures.hpp"
#include "metal/miner.hpp"
#include "oracles.hpp"

using namespace metal;
using namespace metal::mining;

namespace {

const MultiSourcePattern* find(const std::vector<MultiSourcePattern>& ps, const Context& c, const Sequence& s) {
  for (const auto& p : ps)
    if (p.context == c && p.sequence == s) return &p;
  return nullptr;
}

std::string dump(const std::vector<MultiSourcePattern>& ps) {
  std::string out;
  for (const auto& p : ps) out += to_json(p).dump() + "\n";
  return out;
}

}  // namespace

TEST_CASE("D1 reproduces the published pattern shape") {
  auto d1 = oracle::d1();
  auto out = mine_patterns(d1.db, d1.contexts, d1.params);
  const Context ctx = {"Mathematics-grade-9", "age=14", "sex=M"};
  const auto* p = find(out, ctx, {Item::id("R-15"), Item::id("R-42"), Item::attr("subject=Mathematics")});
  REQUIRE(p);
  CHECK(p->support == 2);
  CHECK(p->group == 2);
  CHECK_FALSE(find(out, ctx, {Item::id("R-15"), Item::id("R-42"), Item::id("R-77")}));
  CHECK(out == oracle::mine_exhaustive(d1.db, d1.contexts, d1.params));
}

TEST_CASE("output order is canonical with ids before attributes") {
  auto d1 = oracle::d1();
  auto out = mine_patterns(d1.db, d1.contexts, d1.params);
  CHECK(std::is_sorted(out.begin(), out.end(), canonical_less));
  CHECK(Item::id("subject=Mathematics") < Item::attr("subject=Mathematics"));
}

TEST_CASE("redundant generalizations are dropped") {
  auto d1 = oracle::d1();
  auto out = mine_patterns(d1.db, d1.contexts, d1.params);
  // {age=14} has the same two supporters as its {age=14, sex=M} refinement.
  CHECK_FALSE(find(out, {"age=14"}, {Item::id("R-15"), Item::id("R-42")}));
  // attr(subject=Mathematics) alone is matched by the same learners as id(R-15).
  CHECK_FALSE(find(out, {"Mathematics-grade-9", "age=14", "sex=M"}, {Item::attr("subject=Mathematics")}));
  CHECK(find(out, {"Mathematics-grade-9", "age=14", "sex=M"}, {Item::id("R-15"), Item::id("R-42")}));
}

TEST_CASE("matches the exhaustive oracle on random instances") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 60; ++i) {
    auto in = oracle::random_instance(rng);
    auto expected = oracle::mine_exhaustive(in.db, in.contexts, in.params);
    auto got = mine_patterns(in.db, in.contexts, in.params);
    INFO("instance " << i);
    CHECK(dump(got) == dump(expected));
  }
}

TEST_CASE("parallel and serial runs agree") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 30; ++i) {
    auto in = oracle::random_instance(rng);
    CHECK(mine_patterns(in.db, in.contexts, in.params) == mine_patterns_serial(in.db, in.contexts, in.params));
  }
}

TEST_CASE("support is anti-monotone under extension") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 40; ++i) {
    auto in = oracle::random_instance(rng);
    for (const auto& p : mine_patterns(in.db, in.contexts, in.params)) {
      auto base = pattern_support(p.context, p.sequence, in.db, in.contexts);
      CHECK(base.support == oracle::brute_support(p.context, p.sequence, in.db, in.contexts));
      Sequence longer = p.sequence;
      longer.push_back(Item::attr("subject=Mathematics"));
      CHECK(pattern_support(p.context, longer, in.db, in.contexts).support <= base.support);
      Context wider = p.context;
      wider.push_back("zzz");
      CHECK(pattern_support(wider, p.sequence, in.db, in.contexts).support <= base.support);
    }
  }
}

TEST_CASE("empty input mines nothing") {
  CHECK(mine_patterns({}, {}, {}).empty());
}

TEST_CASE("candidate cap and parameter validation") {
  auto d1 = oracle::d1();
  auto params = d1.params;
  params.candidate_cap = 5;
  CHECK_THROWS_WITH_AS(mine_patterns(d1.db, d1.contexts, params), doctest::Contains("candidate"), Error);
  params = d1.params;
  params.min_support = 0;
  CHECK_THROWS_AS(mine_patterns(d1.db, d1.contexts, params), Error);
  params.min_support = 1.5;
  CHECK_THROWS_AS(mine_patterns(d1.db, d1.contexts, params), Error);
}

TEST_CASE("sessions split on gaps above the threshold") {
  auto t0 = fixtures::at("2019-03-01T09:00:00Z");
  std::vector<SessionEvent> evs = {{"a", t0, "1"},
                                   {"b", t0 + std::chrono::minutes(30), "2"},
                                   {"c", t0 + std::chrono::minutes(61), "3"}};
  auto sessions = sessionize(evs, kDefaultSessionGap);
  REQUIRE(sessions.size() == 2);
  CHECK(sessions[0].size() == 2);
  std::reverse(evs.begin(), evs.end());
  CHECK(sessionize(evs, kDefaultSessionGap) == sessions);
}

TEST_CASE("sequence db is independent of event order and rejects unknown resources") {
  std::vector<ActivityEvent> events;
  auto t0 = fixtures::at("2019-03-01T09:00:00Z");
  std::mt19937_64 rng(5);
  for (int i = 0; i < 100; ++i)
    events.push_back({"L" + std::to_string(i % 4), t0 + std::chrono::minutes(rng() % 300), "R-" + std::to_string(i % 3),
                      fixtures::kExperienced, "s" + std::to_string(i)});
  ResourceAttributes attrs = {{"R-0", {}}, {"R-1", {"subject=Mathematics"}}, {"R-2", {}}};
  auto db = build_sequence_db(events, attrs);
  std::shuffle(events.begin(), events.end(), rng);
  CHECK(build_sequence_db(events, attrs) == db);

  events.push_back({"L1", t0, "R-404", fixtures::kExperienced, "s-x"});
  CHECK_THROWS_WITH_AS(build_sequence_db(events, attrs), doctest::Contains("R-404"), Error);
}

TEST_CASE("store statements become mining input") {
  fixtures::ManualClock clock(fixtures::at("2019-03-02T00:00:00Z"));
  Store store({}, clock.clock());
  REQUIRE(import_csv_bundle(store, fixtures::d1_bundle()).committed);
  store.insert_statements(fixtures::d1_statements());
  auto in = mining_input(store.roster(), store.activity_events(), fixtures::kD1Reference);
  auto d1 = oracle::d1();
  CHECK(in.contexts.at("L1") == d1.contexts.at("L1"));
  auto got = mine_patterns(in.db, in.contexts, d1.params);
  CHECK(find(got, {"Mathematics-grade-9", "age=14", "sex=M"},
             {Item::id("R-15"), Item::id("R-42"), Item::attr("subject=Mathematics")}));
}
