#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "metal/store.hpp"
#include "metal/time.hpp"

namespace metal::mining {

inline constexpr Millis kDefaultSessionGap{30 * 60'000};

struct SessionEvent {
  std::string resource_id;
  Instant instant{};
  std::string statement_id;
  friend bool operator==(const SessionEvent&, const SessionEvent&) = default;
};

using Session = std::vector<SessionEvent>;
using ResourceAttributes = std::map<std::string, std::set<std::string>>;
using LearnerContexts = std::map<std::string, std::set<std::string>>;

struct SequenceDB {
  std::map<std::string, std::vector<Session>> sessions;  // learner -> sessions
  ResourceAttributes attributes;                         // resource -> key=value labels

  bool empty() const { return sessions.empty(); }
  friend bool operator==(const SequenceDB&, const SequenceDB&) = default;
};

/// Splits one learner's events into sessions wherever the gap between
/// consecutive events exceeds `session_gap`. Events are ordered by instant,
/// ties broken by statement id.
std::vector<Session> sessionize(std::vector<SessionEvent> events, Millis session_gap);

/// Throws Error(UnknownResource) listing every event whose resource is not
/// in `attributes`.
SequenceDB build_sequence_db(const std::vector<ActivityEvent>& events, ResourceAttributes attributes,
                             Millis session_gap = kDefaultSessionGap);

ResourceAttributes resource_attributes(const RosterTables& roster);

/// Everything the miner needs, taken from one consistent view of the store.
struct MiningInput {
  SequenceDB db;
  LearnerContexts contexts;
};

/// Contexts are resolved for every learner user, demographic record and
/// event actor at `reference`.
MiningInput mining_input(const RosterTables& roster, const std::vector<ActivityEvent>& events,
                         const CivilDate& reference, Millis session_gap = kDefaultSessionGap);

}  // namespace metal::mining
