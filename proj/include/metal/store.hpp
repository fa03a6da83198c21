#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "metal/roster.hpp"
#include "metal/statement.hpp"

namespace metal {

/// A learner interaction with a known resource, derived 1:1 from a stored,
/// non-voided statement.
struct ActivityEvent {
  std::string learner_id;
  Instant instant{};
  std::string resource_id;
  std::string verb_id;
  std::string statement_id;
  friend bool operator==(const ActivityEvent&, const ActivityEvent&) = default;
};

struct StatementFilter {
  std::optional<Agent> agent;
  std::optional<std::string> verb;
  std::optional<std::string> activity;
  std::optional<Instant> since;  // stored > since
  std::optional<Instant> until;  // stored <= until
  std::size_t limit = 100;
  std::optional<std::string> cursor;
};

struct StatementPage {
  std::vector<Statement> statements;
  std::optional<std::string> more;
};

using Clock = std::function<Instant()>;
Clock system_clock();

/// Statement log plus roster tables. With a directory the statement log is
/// appended to `statements.jsonl` and the roster rewritten to `roster.json`
/// on each change; without one the store is memory-only.
///
/// Readers take a shared lock and see a consistent snapshot; writers are
/// serialized.
class Store {
 public:
  explicit Store(std::filesystem::path dir = {}, Clock clock = system_clock());

  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  // Statements -------------------------------------------------------------

  /// Returns the stored id. Identical re-inserts are accepted as no-ops.
  std::string insert_statement(const Json& candidate);
  /// All-or-nothing. On error nothing is stored and the error subject is
  /// prefixed with `[index].`.
  std::vector<std::string> insert_statements(const std::vector<Json>& batch);

  std::optional<Statement> statement(std::string_view id) const;
  StatementPage query_statements(const StatementFilter& filter) const;
  std::size_t statement_count() const;

  // Roster -----------------------------------------------------------------

  std::string upsert_roster_record(const RosterRecord& record);
  /// Applies every record or none. Records may reference each other in any
  /// order within the bundle.
  void upsert_roster_bundle(const std::vector<RosterRecord>& records);
  /// Swaps in fully validated tables built from a snapshot copy.
  void commit_roster(RosterTables tables);

  RosterTables roster() const;
  std::set<std::string> learner_context(std::string_view learner_id,
                                        const CivilDate& reference) const;

  // Derived ----------------------------------------------------------------

  /// Events for non-voided statements whose actor resolves to a user and
  /// whose activity resolves to a resource, in (instant, statement id) order.
  std::vector<ActivityEvent> activity_events() const;

  /// Canonical text of the whole store state; equal strings mean equal stores.
  std::string canonical_dump() const;

  const std::filesystem::path& directory() const { return dir_; }

 private:
  Statement prepare(const Json& candidate, Instant now) const;
  void persist_roster_locked() const;
  void append_log_locked(const std::vector<Statement>& added) const;
  void load();

  std::filesystem::path dir_;
  Clock clock_;
  mutable std::shared_mutex mutex_;
  std::vector<Statement> statements_;
  std::unordered_map<std::string, std::size_t> index_;
  Instant last_stored_{};
  RosterTables roster_;
};

/// Resolves an actor to a user id: account name, else mailbox email.
std::optional<std::string> resolve_actor(const RosterTables& roster, const Agent& actor);
/// Resolves an activity id (`res:<id>` or a bare id) to a resource id.
std::optional<std::string> resolve_activity(const RosterTables& roster, std::string_view activity);

std::string encode_cursor(Instant stored, std::string_view id);
std::optional<std::pair<Instant, std::string>> decode_cursor(std::string_view token);

}  // namespace metal
