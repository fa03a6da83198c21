#include "metal/sequence_db.hpp"

#include <algorithm>

#include "metal/error.hpp"

namespace metal::mining {

std::vector<Session> sessionize(std::vector<SessionEvent> events, Millis session_gap) {
  std::sort(events.begin(), events.end(), [](const SessionEvent& a, const SessionEvent& b) {
    return std::tie(a.instant, a.statement_id) < std::tie(b.instant, b.statement_id);
  });
  std::vector<Session> sessions;
  for (auto& e : events) {
    if (sessions.empty() || e.instant - sessions.back().back().instant > session_gap)
      sessions.emplace_back();
    sessions.back().push_back(std::move(e));
  }
  return sessions;
}

SequenceDB build_sequence_db(const std::vector<ActivityEvent>& events, ResourceAttributes attributes,
                             Millis session_gap) {
  std::vector<std::string> unknown;
  std::map<std::string, std::vector<SessionEvent>> per_learner;
  for (const auto& e : events) {
    if (!attributes.contains(e.resource_id)) {
      unknown.push_back(e.statement_id + " (" + e.resource_id + ")");
      continue;
    }
    per_learner[e.learner_id].push_back({e.resource_id, e.instant, e.statement_id});
  }
  if (!unknown.empty()) {
    std::string list;
    for (const auto& u : unknown) list += (list.empty() ? "" : ", ") + u;
    throw Error(ErrorCode::UnknownResource, list, "events reference unknown resources: " + list);
  }
  SequenceDB db;
  db.attributes = std::move(attributes);
  for (auto& [learner, evs] : per_learner) db.sessions[learner] = sessionize(std::move(evs), session_gap);
  return db;
}

ResourceAttributes resource_attributes(const RosterTables& roster) {
  ResourceAttributes out;
  for (const auto& [id, r] : roster.resources) out[id] = r.attributes;
  return out;
}

MiningInput mining_input(const RosterTables& roster, const std::vector<ActivityEvent>& events,
                         const CivilDate& reference, Millis session_gap) {
  MiningInput in;
  in.db = build_sequence_db(events, resource_attributes(roster), session_gap);
  std::set<std::string> learners;
  for (const auto& [id, u] : roster.users)
    if (u.role == UserRole::Learner) learners.insert(id);
  for (const auto& [id, l] : roster.learners) learners.insert(id);
  for (const auto& [id, s] : in.db.sessions) learners.insert(id);
  for (const auto& id : learners) in.contexts[id] = resolve_learner_context(roster, id, reference);
  return in;
}

}  // namespace metal::mining
