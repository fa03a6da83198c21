#include "metal/store.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "metal/error.hpp"
#include "metal/ids.hpp"

namespace metal {

namespace fs = std::filesystem;

Clock system_clock() {
  return [] { return std::chrono::time_point_cast<Millis>(std::chrono::system_clock::now()); };
}

std::string encode_cursor(Instant stored, std::string_view id) {
  static constexpr char hex[] = "0123456789abcdef";
  std::string raw = std::to_string(stored.time_since_epoch().count()) + "|" + std::string(id);
  std::string out = "c";
  for (unsigned char c : raw) {
    out += hex[c >> 4];
    out += hex[c & 15];
  }
  return out;
}

std::optional<std::pair<Instant, std::string>> decode_cursor(std::string_view token) {
  if (token.size() < 3 || token[0] != 'c' || token.size() % 2 == 0) return std::nullopt;
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    return -1;
  };
  std::string raw;
  for (std::size_t i = 1; i < token.size(); i += 2) {
    int hi = nibble(token[i]), lo = nibble(token[i + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    raw += static_cast<char>(hi * 16 + lo);
  }
  auto bar = raw.find('|');
  if (bar == std::string::npos || bar == 0) return std::nullopt;
  long long ms = 0;
  try {
    std::size_t used = 0;
    ms = std::stoll(raw.substr(0, bar), &used);
    if (used != bar) return std::nullopt;
  } catch (const std::exception&) {
    return std::nullopt;
  }
  std::string id = raw.substr(bar + 1);
  if (!is_uuid(id)) return std::nullopt;
  return std::pair{Instant{Millis{ms}}, id};
}

std::optional<std::string> resolve_actor(const RosterTables& roster, const Agent& actor) {
  if (actor.has_account() && roster.users.contains(actor.account_name)) return actor.account_name;
  if (!actor.mbox.empty()) {
    std::string_view email = std::string_view(actor.mbox).substr(7);
    for (const auto& [id, u] : roster.users)
      if (!u.email.empty() && u.email == email) return id;
  }
  return std::nullopt;
}

std::optional<std::string> resolve_activity(const RosterTables& roster, std::string_view activity) {
  std::string key(activity);
  if (key.rfind("res:", 0) == 0) key = key.substr(4);
  if (roster.resources.contains(key)) return key;
  if (roster.resources.contains(std::string(activity))) return std::string(activity);
  return std::nullopt;
}

Store::Store(fs::path dir, Clock clock) : dir_(std::move(dir)), clock_(std::move(clock)) {
  if (!dir_.empty()) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error(ErrorCode::Storage, dir_.string(), "cannot create store directory: " + ec.message());
    load();
  }
}

void Store::load() {
  if (std::ifstream in{dir_ / "statements.jsonl"}) {
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      Json body = Json::parse(line, nullptr, false);
      if (body.is_discarded())
        throw Error(ErrorCode::Storage, "statements.jsonl:" + std::to_string(n), "corrupt statement log");
      Statement s = parse_statement(body);
      s.body = std::move(body);
      s.timestamp = *parse_instant(s.body.at("timestamp").get<std::string>());
      s.stored = *parse_instant(s.body.at("stored").get<std::string>());
      last_stored_ = std::max(last_stored_, s.stored);
      index_[s.id] = statements_.size();
      statements_.push_back(std::move(s));
    }
    for (const auto& s : statements_)
      if (s.is_voiding())
        if (auto it = index_.find(s.object.id); it != index_.end()) statements_[it->second].voided = true;
  }
  if (std::ifstream in{dir_ / "roster.json"}) {
    Json j = Json::parse(in, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::Storage, "roster.json", "corrupt roster table");
    roster_ = roster_from_json(j);
  }
}

void Store::append_log_locked(const std::vector<Statement>& added) const {
  if (dir_.empty() || added.empty()) return;
  std::string chunk;
  for (const auto& s : added) chunk += s.body.dump() + "\n";
  std::ofstream out(dir_ / "statements.jsonl", std::ios::app | std::ios::binary);
  out << chunk;
  out.flush();
  if (!out) throw Error(ErrorCode::Storage, "statements.jsonl", "failed to append statement log");
}

void Store::persist_roster_locked() const {
  if (dir_.empty()) return;
  fs::path tmp = dir_ / "roster.json.tmp";
  {
    std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
    out << to_json(roster_).dump(1) << "\n";
    out.flush();
    if (!out) throw Error(ErrorCode::Storage, "roster.json", "failed to write roster table");
  }
  fs::rename(tmp, dir_ / "roster.json");
}

Statement Store::prepare(const Json& candidate, Instant now) const {
  Statement s = parse_statement(candidate);
  bool had_timestamp = candidate.contains("timestamp");
  if (s.id.empty()) {
    s.id = make_uuid();
    s.body["id"] = s.id;
  }
  if (!had_timestamp) {
    s.timestamp = now;
    s.body["timestamp"] = format_instant(now);
  } else if (s.timestamp > now + kClockSkewAllowance) {
    throw Error(ErrorCode::Validation, "timestamp",
                "timestamp: more than 60 s after the stored instant");
  }
  s.stored = now;
  s.body["stored"] = format_instant(now);
  s.body.erase("authority");
  return s;
}

std::string Store::insert_statement(const Json& candidate) {
  try {
    return insert_statements({candidate}).front();
  } catch (const Error& e) {
    std::string subject = e.subject();
    if (subject.rfind("[0].", 0) == 0) subject = subject.substr(4);
    throw Error(e.code(), subject, e.what());
  }
}

std::vector<std::string> Store::insert_statements(const std::vector<Json>& batch) {
  std::unique_lock lock(mutex_);
  Instant now = std::max(clock_(), last_stored_);
  std::vector<Statement> staged;
  std::unordered_map<std::string, std::size_t> staged_index;
  std::vector<std::string> ids;
  ids.reserve(batch.size());

  for (std::size_t i = 0; i < batch.size(); ++i) {
    std::string prefix = "[" + std::to_string(i) + "].";
    try {
      Statement s = prepare(batch[i], now);

      auto same_content = [&](const Statement& existing) {
        Json a = existing.content(), b = s.content();
        if (!batch[i].contains("timestamp")) {
          a.erase("timestamp");
          b.erase("timestamp");
        }
        return a == b;
      };
      const Statement* existing = nullptr;
      if (auto it = index_.find(s.id); it != index_.end()) existing = &statements_[it->second];
      else if (auto jt = staged_index.find(s.id); jt != staged_index.end()) existing = &staged[jt->second];
      if (existing) {
        if (!same_content(*existing))
          throw Error(ErrorCode::Conflict, "id",
                      "statement '" + s.id + "' already exists with different content");
        ids.push_back(s.id);
        continue;
      }

      if (s.is_voiding()) {
        const Statement* target = nullptr;
        if (auto it = index_.find(s.object.id); it != index_.end()) target = &statements_[it->second];
        else if (auto jt = staged_index.find(s.object.id); jt != staged_index.end()) target = &staged[jt->second];
        if (!target)
          throw Error(ErrorCode::Validation, "object.id",
                      "object.id: voided statement '" + s.object.id + "' does not exist");
        if (target->is_voiding())
          throw Error(ErrorCode::Validation, "object.id",
                      "object.id: voiding statements cannot be voided");
      }
      ids.push_back(s.id);
      staged_index[s.id] = staged.size();
      staged.push_back(std::move(s));
    } catch (const Error& e) {
      throw Error(e.code(), prefix + e.subject(), prefix + e.what());
    }
  }

  append_log_locked(staged);
  last_stored_ = now;
  for (auto& s : staged) {
    index_[s.id] = statements_.size();
    statements_.push_back(std::move(s));
  }
  for (std::size_t i = statements_.size() - staged_index.size(); i < statements_.size(); ++i)
    if (statements_[i].is_voiding()) statements_[index_.at(statements_[i].object.id)].voided = true;
  return ids;
}

std::optional<Statement> Store::statement(std::string_view id) const {
  std::shared_lock lock(mutex_);
  auto it = index_.find(to_lower(id));
  if (it == index_.end()) return std::nullopt;
  return statements_[it->second];
}

std::size_t Store::statement_count() const {
  std::shared_lock lock(mutex_);
  return statements_.size();
}

StatementPage Store::query_statements(const StatementFilter& f) const {
  if (f.limit < 1) throw Error(ErrorCode::BadFilter, "limit", "limit must be at least 1");
  std::optional<std::pair<Instant, std::string>> after;
  if (f.cursor) {
    after = decode_cursor(*f.cursor);
    if (!after) throw Error(ErrorCode::BadFilter, "cursor", "unknown cursor");
  }
  auto before = [](const Statement* a, const Statement* b) {
    if (a->stored != b->stored) return a->stored > b->stored;
    return a->id < b->id;
  };

  std::shared_lock lock(mutex_);
  std::vector<const Statement*> hits;
  for (const auto& s : statements_) {
    if (s.voided) continue;
    if (f.agent && !s.actor.matches(*f.agent)) continue;
    if (f.verb && s.verb_id != *f.verb) continue;
    if (f.activity && (s.object.statement_ref || s.object.id != *f.activity)) continue;
    if (f.since && !(s.stored > *f.since)) continue;
    if (f.until && !(s.stored <= *f.until)) continue;
    if (after && !(s.stored < after->first || (s.stored == after->first && s.id > after->second)))
      continue;
    hits.push_back(&s);
  }
  std::sort(hits.begin(), hits.end(), before);

  StatementPage page;
  std::size_t n = std::min(f.limit, hits.size());
  for (std::size_t i = 0; i < n; ++i) page.statements.push_back(*hits[i]);
  if (hits.size() > n) page.more = encode_cursor(hits[n - 1]->stored, hits[n - 1]->id);
  return page;
}

std::string Store::upsert_roster_record(const RosterRecord& record) {
  std::unique_lock lock(mutex_);
  RosterTables staged = roster_;
  apply_record(staged, record);
  roster_ = std::move(staged);
  persist_roster_locked();
  return record_key(record);
}

void Store::upsert_roster_bundle(const std::vector<RosterRecord>& records) {
  std::vector<const RosterRecord*> ordered;
  for (const auto& r : records) ordered.push_back(&r);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const RosterRecord* a, const RosterRecord* b) { return a->index() < b->index(); });
  std::unique_lock lock(mutex_);
  RosterTables staged = roster_;
  for (const auto* r : ordered) apply_record(staged, *r);
  roster_ = std::move(staged);
  persist_roster_locked();
}

void Store::commit_roster(RosterTables tables) {
  if (auto missing = find_dangling_reference(tables))
    throw Error(ErrorCode::DanglingReference, *missing, "'" + *missing + "' does not exist");
  std::unique_lock lock(mutex_);
  roster_ = std::move(tables);
  persist_roster_locked();
}

RosterTables Store::roster() const {
  std::shared_lock lock(mutex_);
  return roster_;
}

std::set<std::string> Store::learner_context(std::string_view learner_id,
                                             const CivilDate& reference) const {
  std::shared_lock lock(mutex_);
  return resolve_learner_context(roster_, learner_id, reference);
}

std::vector<ActivityEvent> Store::activity_events() const {
  std::shared_lock lock(mutex_);
  std::vector<ActivityEvent> events;
  for (const auto& s : statements_) {
    if (s.voided || s.is_voiding() || s.object.statement_ref) continue;
    auto resource = resolve_activity(roster_, s.object.id);
    if (!resource) continue;
    auto learner = resolve_actor(roster_, s.actor);
    if (!learner) continue;
    events.push_back({*learner, s.timestamp, *resource, s.verb_id, s.id});
  }
  std::sort(events.begin(), events.end(), [](const ActivityEvent& a, const ActivityEvent& b) {
    return std::tie(a.instant, a.statement_id) < std::tie(b.instant, b.statement_id);
  });
  return events;
}

std::string Store::canonical_dump() const {
  std::shared_lock lock(mutex_);
  std::ostringstream out;
  for (const auto& s : statements_) out << s.body.dump() << (s.voided ? " V" : "") << "\n";
  out << to_json(roster_).dump() << "\n";
  return out.str();
}

}  // namespace metal
