#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "metal/indicators.hpp"

using namespace metal;
using namespace metal::indicators;
using fixtures::at;
using std::chrono::minutes;

namespace {

IndicatorData learner_with(const std::vector<Instant>& instants) {
  IndicatorData d;
  d.roster.users["L1"] = User{"L1", UserRole::Learner, "", "", ""};
  int i = 0;
  for (Instant t : instants) d.events.push_back({"L1", t, "R-1", fixtures::kExperienced, "s" + std::to_string(i++)});
  return d;
}

const Window kTenDays{at("2019-03-01T00:00:00Z"), at("2019-03-11T00:00:00Z")};

}  // namespace

TEST_CASE("pulse radii follow the square-root law") {
  std::vector<std::size_t> counts = {1, 4, 9};
  auto r = pulse_radii(counts);
  CHECK(r[0] == doctest::Approx(1.0 / 3));
  CHECK(r[1] == doctest::Approx(2.0 / 3));
  CHECK(r[2] == 1.0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(r[i] * r[i] == doctest::Approx(counts[i] / 9.0).epsilon(1e-15));
  std::vector<std::size_t> zeros = {0, 0};
  CHECK(pulse_radii(zeros) == std::vector<double>{0, 0});
  std::vector<std::size_t> permuted = {9, 1, 4};
  auto rp = pulse_radii(permuted);
  CHECK(rp[0] == r[2]);
  CHECK(rp[1] == r[0]);
  CHECK(rp[2] == r[1]);
}

TEST_CASE("engagement is the active-day ratio") {
  std::vector<Instant> none;
  CHECK(engagement(none, kTenDays) == 0.0);
  std::vector<Instant> five;
  for (int d = 0; d < 10; d += 2) {
    five.push_back(kTenDays.from + kDay * d + minutes(30));
    five.push_back(kTenDays.from + kDay * d + minutes(90));  // same day, no change
  }
  CHECK(engagement(five, kTenDays) == 0.5);
  std::vector<Instant> every;
  for (int d = 0; d < 10; ++d) every.push_back(kTenDays.from + kDay * d);
  CHECK(engagement(every, kTenDays) == 1.0);
  CHECK_THROWS_AS(engagement(every, Window{kTenDays.from, kTenDays.from + minutes(60)}), Error);
}

TEST_CASE("effort sums capped same-session gaps") {
  Instant t0 = at("2019-03-01T09:00:00Z");
  std::vector<Instant> single = {t0};
  CHECK(effort_minutes(single, kTenDays, minutes(30), minutes(10)) == 0);
  std::vector<Instant> gaps = {t0, t0 + minutes(3), t0 + minutes(11), t0 + minutes(51)};
  CHECK(effort_minutes(gaps, kTenDays, minutes(30), minutes(10)) == 11.0);
  std::vector<Instant> capped = {t0, t0 + minutes(25)};
  CHECK(effort_minutes(capped, kTenDays, minutes(30), minutes(10)) == 10.0);
}

TEST_CASE("store-backed indicators ignore events outside the window") {
  Instant t0 = at("2019-03-02T09:00:00Z");
  auto d = learner_with({t0, t0 + minutes(3), t0 + minutes(11)});
  double effort = effort_indicator(d, "L1", kTenDays);
  double engaged = engagement_indicator(d, "L1", kTenDays);
  d.events.push_back({"L1", at("2019-04-01T09:00:00Z"), "R-1", fixtures::kExperienced, "late"});
  CHECK(effort_indicator(d, "L1", kTenDays) == effort);
  CHECK(engagement_indicator(d, "L1", kTenDays) == engaged);
  CHECK(engaged == doctest::Approx(0.1));

  auto pulse = activity_pulse(d, "L1", kTenDays);
  REQUIRE(pulse.points.size() == 10);
  CHECK(pulse.points[1].value == 3);
  CHECK(pulse.points[1].aux.at("radius") == 1.0);
  CHECK_THROWS_AS(activity_pulse(d, "ghost", kTenDays), Error);
}

TEST_CASE("skill evolution averages per learner, then across the class") {
  Store store;
  REQUIRE(import_csv_bundle(store, fixtures::d1_bundle()).committed);
  REQUIRE(import_csv_bundle(store, {{"results", "sourcedId,userId,skillId,score,date\n"
                                                "S1,L1,fractions,0.4,2019-03-03\n"
                                                "S2,L2,fractions,0.8,2019-03-03\n"
                                                "S3,L1,fractions,0.9,2019-03-05\n"}})
              .committed);
  auto d = IndicatorData::from(store);
  auto cls = skill_evolution(d, "C-math", "fractions", kTenDays);
  REQUIRE(cls.points.size() == 2);
  CHECK(cls.points[0].value == doctest::Approx(0.6));
  CHECK(cls.points[1].value == doctest::Approx(0.9));

  auto one = skill_evolution(d, "L2", "fractions", kTenDays);
  REQUIRE(one.points.size() == 1);
  CHECK(one.points[0].value == doctest::Approx(0.8));
  CHECK(skill_evolution(d, "L3", "fractions", kTenDays).points.empty());
  CHECK_THROWS_AS(skill_evolution(d, "L1", "juggling", kTenDays), Error);

  auto report = class_report(d, "C-math", kTenDays);
  CHECK(report["learners"].size() == 2);
  CHECK(report["skills"].size() == 1);
}
