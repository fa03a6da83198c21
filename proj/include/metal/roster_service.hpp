#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "metal/http.hpp"
#include "metal/store.hpp"

namespace metal {

/// Named CSV texts keyed by entity name (users, demographics, classes,
/// enrollments, results, resources, curriculum, schoollife, activities).
using Bundle = std::map<std::string, std::string>;

Bundle bundle_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Bundle& b);

struct ImportError {
  std::size_t row = 0;  // CSV line; 1 is the header
  std::string column;
  std::string code;
  std::string message;
};

struct FileReport {
  std::size_t rows_read = 0;
  std::size_t rows_accepted = 0;
  std::vector<ImportError> errors;
};

struct ImportReport {
  std::map<std::string, FileReport> files;
  bool committed = false;
};

nlohmann::json to_json(const ImportReport& r);

/// Roster tables and activity events parsed from a bundle, with every
/// row-level error collected. `tables` starts from `base`.
struct StagedBundle {
  RosterTables tables;
  std::vector<ActivityEvent> activities;
  ImportReport report;
};

/// Parses and applies a bundle onto a copy of `base` without touching any
/// store. `activities` files are accepted only when `allow_activities`.
StagedBundle stage_bundle(const Bundle& files, const RosterTables& base, bool allow_activities);

/// Atomic: every row is upserted or none; the report lists all errors.
ImportReport import_csv_bundle(Store& store, const Bundle& files);

/// Keyed one-way pseudonym of a user id.
std::string pseudonym(const std::string& salt, const std::string& id);

inline const std::set<std::string> kRosterEntities = {
    "users", "demographics", "classes", "enrollments", "results", "resources", "curriculum", "schoollife"};

/// Import-format CSVs with user ids replaced by pseudonyms, names and
/// mailboxes dropped and birth dates cut to the year. `activities` exports
/// the derived activity events. Throws Validation on an empty salt or
/// UnknownEntityType.
Bundle export_pseudonymized(const Store& store, const std::string& salt,
                            const std::set<std::string>& entities);

/// Entity listing ordered by key, exact-match filters on the record's
/// scalar fields, `limit` and `cursor` paging.
nlohmann::json read_roster(const RosterTables& tables, const std::string& entity,
                           const std::map<std::string, std::string>& filters, std::size_t limit,
                           const std::optional<std::string>& cursor);

/// Wire layer: POST /roster/import, GET /roster/{entity}, POST /roster/export.
class RosterService {
 public:
  explicit RosterService(Store& store) : store_(store) {}

  http::Response import(const http::Request& req);
  http::Response read(const std::string& entity, const http::Request& req);
  http::Response export_bundle(const http::Request& req);

 private:
  Store& store_;
};

}  // namespace metal
