#pragma once

#include <atomic>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <thread>

#include "metal/roster_service.hpp"
#include "metal/store.hpp"

namespace fixtures {

using metal::Instant;
using metal::Json;

inline Instant at(const std::string& iso) { return *metal::parse_instant(iso); }

/// Settable clock shared by a store and its test.
struct ManualClock {
  std::shared_ptr<std::atomic<std::int64_t>> ms = std::make_shared<std::atomic<std::int64_t>>(0);

  explicit ManualClock(Instant start) { set(start); }
  void set(Instant t) { ms->store(t.time_since_epoch().count()); }
  void advance(metal::Millis d) { ms->fetch_add(d.count()); }
  metal::Clock clock() const {
    auto p = ms;
    return [p] { return Instant{metal::Millis{p->load()}}; };
  }
};

inline Json statement(const std::string& user, const std::string& verb, const std::string& activity,
                      const std::string& timestamp = {}) {
  Json s = {{"actor", {{"objectType", "Agent"}, {"account", {{"homePage", "https://school.example"}, {"name", user}}}}},
            {"verb", {{"id", verb}}},
            {"object", {{"objectType", "Activity"}, {"id", activity}}}};
  if (!timestamp.empty()) s["timestamp"] = timestamp;
  return s;
}

inline const std::string kExperienced = "http://adlnet.gov/expapi/verbs/experienced";

/// Roster for the published pattern shape, ages resolved at 2019-03-01.
inline metal::Bundle d1_bundle() {
  return {
      {"users", "sourcedId,role,givenName,familyName,email\n"
                "L1,learner,Ana,A,ana@school.example\n"
                "L2,learner,Ben,B,ben@school.example\n"
                "L3,learner,Chloe,C,chloe@school.example\n"
                "T1,teacher,Tom,T,tom@school.example\n"},
      {"demographics", "userId,birthDate,sex,nationality,socioProfessionalCategory,guardians\n"
                       "L1,2004-06-01,M,FR,,\n"
                       "L2,2004-09-12,M,FR,,\n"
                       "L3,2003-05-02,F,FR,,\n"},
      {"classes", "sourcedId,schoolId,subject,year\nC-math,S1,Mathematics,2018-2019\n"},
      {"enrollments", "sourcedId,userId,classId,role\n"
                      "E1,L1,C-math,learner\nE2,L2,C-math,learner\nE3,T1,C-math,teacher\n"},
      {"resources", "sourcedId,title,subject,resourceType,publisher,gradeLevel\n"
                    "R-15,Fractions,Mathematics,,,\n"
                    "R-42,Decimals,Mathematics,,,\n"
                    "R-77,Ratios,Mathematics,,,\n"
                    "R-88,Percentages,Mathematics,,,\n"
                    "R-80,Revolutions,History,,,\n"},
      {"curriculum", "learnerId,schoolYear,gradeSubjects,annualResults\n"
                     "L1,2018-2019,Mathematics-grade-9,\n"
                     "L2,2018-2019,Mathematics-grade-9,\n"
                     "L3,2018-2019,History-grade-9,\n"},
  };
}

inline const metal::CivilDate kD1Reference{2019, 3, 1, false};

/// D1 sessions as statements, one session per learner on 2019-03-01.
inline std::vector<Json> d1_statements() {
  std::vector<Json> out;
  auto add = [&](const std::string& user, std::vector<std::string> resources, int hour) {
    int minute = 0;
    for (const auto& r : resources) {
      char ts[32];
      std::snprintf(ts, sizeof ts, "2019-03-01T%02d:%02d:00Z", hour, minute);
      out.push_back(statement(user, kExperienced, "res:" + r, ts));
      minute += 5;
    }
  };
  add("L1", {"R-15", "R-42", "R-77"}, 9);
  add("L2", {"R-15", "R-42", "R-88"}, 10);
  add("L3", {"R-80"}, 11);
  return out;
}

/// A fourth learner shaped like L1 with only the antecedent <R-15, R-42>
/// behind them. Returns that history.
inline std::vector<Json> add_l4(metal::Store& store) {
  metal::import_csv_bundle(store, {{"users", "sourcedId,role\nL4,learner\n"},
                                   {"demographics", "userId,birthDate,sex\nL4,2004-07-07,M\n"},
                                   {"curriculum", "learnerId,schoolYear,gradeSubjects\nL4,2018-2019,Mathematics-grade-9\n"}});
  return {statement("L4", kExperienced, "res:R-15", "2019-03-01T11:30:00Z"),
          statement("L4", kExperienced, "res:R-42", "2019-03-01T11:35:00Z")};
}

/// Stops and joins a background server even when an assertion throws.
template <class Server>
struct ServerGuard {
  Server& server;
  std::thread thread;
  ~ServerGuard() {
    server.stop();
    if (thread.joinable()) thread.join();
  }
};

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    std::random_device rd;
    path = std::filesystem::temp_directory_path() / ("metal-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

}  // namespace fixtures
