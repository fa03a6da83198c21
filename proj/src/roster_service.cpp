#include "metal/roster_service.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include <openssl/evp.h>
#include <openssl/hmac.h>

#include "metal/csv.hpp"
#include "metal/ids.hpp"

namespace metal {

using nlohmann::json;

namespace {

struct EntitySpec {
  std::vector<std::string> required;
  std::vector<std::string> optional;
  std::vector<std::string> filterable;
};

const std::map<std::string, EntitySpec>& specs() {
  static const std::map<std::string, EntitySpec> s = {
      {"users", {{"sourcedId", "role"}, {"givenName", "familyName", "email"},
                 {"id", "role", "givenName", "familyName", "email"}}},
      {"demographics", {{"userId", "birthDate", "sex"}, {"nationality", "socioProfessionalCategory", "guardians"},
                        {"id", "birthDate", "sex", "nationality", "socioProfessionalCategory"}}},
      {"classes", {{"sourcedId", "subject"}, {"schoolId", "year"}, {"id", "schoolId", "subject", "year"}}},
      {"enrollments", {{"sourcedId", "userId", "classId", "role"}, {}, {"id", "userId", "classId", "role"}}},
      {"results", {{"sourcedId", "userId", "skillId", "score", "date"}, {},
                   {"id", "userId", "skillId", "score", "date"}}},
      {"resources", {{"sourcedId"}, {"title", "subject", "resourceType", "publisher", "gradeLevel"},
                     {"id", "title"}}},
      {"curriculum", {{"learnerId", "schoolYear"}, {"gradeSubjects", "annualResults"}, {"learnerId", "schoolYear"}}},
      {"schoollife", {{"learnerId", "classId", "entryType"}, {"date", "subject", "score", "resourceId", "code"},
                      {"learnerId", "classId"}}},
      {"activities", {{"userId", "timestamp", "resourceId"}, {"verb", "statementId"}, {}}},
  };
  return s;
}

// Resource CSV column -> attribute key.
const std::vector<std::pair<std::string, std::string>> kAttributeColumns = {
    {"subject", "subject"}, {"resourceType", "resource-type"}, {"publisher", "publisher"},
    {"gradeLevel", "grade-level"}};

const std::vector<std::string> kApplyOrder = {"users",   "demographics", "classes",    "enrollments",
                                              "results", "resources",    "curriculum", "schoollife"};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep))
    if (!cur.empty()) out.push_back(cur);
  return out;
}

struct RowView {
  const csv::Table& table;
  const csv::Row& row;

  std::string get(const std::string& col) const {
    auto c = table.column(col);
    return c ? row.fields[*c] : std::string();
  }
  std::string id(const std::string& col) const {
    std::string v = get(col);
    if (!is_roster_id(v)) throw Error(ErrorCode::Validation, col, col + ": '" + v + "' is not a valid id");
    return v;
  }
  CivilDate date(const std::string& col) const {
    auto d = parse_date(get(col));
    if (!d) throw Error(ErrorCode::Validation, col, col + ": '" + get(col) + "' is not a date");
    return *d;
  }
  double number(const std::string& col) const {
    std::string v = get(col);
    double x = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (v.empty() || ec != std::errc{} || p != v.data() + v.size() || !std::isfinite(x))
      throw Error(ErrorCode::Validation, col, col + ": '" + v + "' is not a number");
    return x;
  }
};

std::string format_number(double v) {
  json j = v;
  return j.dump();
}

RosterRecord to_record(const std::string& entity, const RowView& r) {
  if (entity == "users") {
    auto role = parse_user_role(r.get("role"));
    if (!role) throw Error(ErrorCode::Validation, "role", "role: unknown role '" + r.get("role") + "'");
    return User{r.id("sourcedId"), *role, r.get("givenName"), r.get("familyName"), r.get("email")};
  }
  if (entity == "demographics")
    return LearnerRecord{r.id("userId"), r.date("birthDate"), r.get("sex"), r.get("nationality"),
                         r.get("socioProfessionalCategory"), split(r.get("guardians"), ';')};
  if (entity == "classes")
    return ClassSection{r.id("sourcedId"), r.get("schoolId"), r.get("subject"), r.get("year")};
  if (entity == "enrollments") {
    auto role = parse_enrollment_role(r.get("role"));
    if (!role) throw Error(ErrorCode::Validation, "role", "role: unknown role '" + r.get("role") + "'");
    return Enrollment{r.id("sourcedId"), r.id("userId"), r.id("classId"), *role};
  }
  if (entity == "results")
    return SkillResult{r.id("sourcedId"), r.id("userId"), r.get("skillId"), r.number("score"), r.date("date")};
  if (entity == "resources") {
    ResourceRecord rec{r.id("sourcedId"), r.get("title"), {}};
    for (const auto& [col, key] : kAttributeColumns)
      if (auto v = r.get(col); !v.empty()) rec.attributes.insert(key + "=" + v);
    return rec;
  }
  if (entity == "curriculum") {
    CurriculumRecord c{r.id("learnerId"), r.get("schoolYear"), {}, {}};
    for (auto& s : split(r.get("gradeSubjects"), ';')) c.grade_subjects.insert(s);
    for (const auto& entry : split(r.get("annualResults"), ';')) {
      auto parts = split(entry, ':');
      double score = 0;
      if (parts.size() != 3 ||
          std::from_chars(parts[1].data(), parts[1].data() + parts[1].size(), score).ec != std::errc{})
        throw Error(ErrorCode::Validation, "annualResults",
                    "annualResults: expected subject:score:period, got '" + entry + "'");
      c.annual_results.push_back({parts[0], score, parts[2]});
    }
    return c;
  }
  throw Error(ErrorCode::UnknownEntityType, entity, "unknown entity type '" + entity + "'");
}

// Applies one school-life row onto `rec`.
void add_school_life_entry(SchoolLifeRecord& rec, const RowView& r) {
  std::string type = r.get("entryType");
  if (type == "mark")
    rec.marks.push_back({r.get("subject"), r.number("score"), r.date("date")});
  else if (type == "homework")
    rec.homework.push_back({r.date("date"), r.get("resourceId")});
  else if (type == "absence")
    rec.absences.push_back({r.date("date"), r.get("code")});
  else if (type == "incident")
    rec.incidents.push_back({r.date("date"), r.get("code")});
  else if (type != "none")
    throw Error(ErrorCode::Validation, "entryType", "entryType: unknown type '" + type + "'");
}

struct PendingRecord {
  std::string file;
  const csv::Table* table;
  const csv::Row* row;
  RosterRecord record;
};

std::string column_holding(const csv::Table& t, const csv::Row& row, const std::string& value,
                           const std::string& fallback) {
  for (std::size_t i = 0; i < row.fields.size(); ++i)
    if (row.fields[i] == value) return t.header[i];
  for (std::size_t i = 0; i < row.fields.size(); ++i)
    for (const auto& part : split(row.fields[i], ';'))
      if (part == value) return t.header[i];
  return fallback;
}

std::string hex(const unsigned char* data, std::size_t n) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    out += digits[data[i] >> 4];
    out += digits[data[i] & 15];
  }
  return out;
}

std::string unhex(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i + 1 < s.size(); i += 2) {
    int v = 0;
    std::from_chars(s.data() + i, s.data() + i + 2, v, 16);
    out += static_cast<char>(v);
  }
  return out;
}

}  // namespace

Bundle bundle_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::Validation, "$", "bundle must map entity names to CSV text");
  Bundle b;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_string()) throw Error(ErrorCode::Validation, k, k + ": CSV text expected");
    b[k] = v.get<std::string>();
  }
  return b;
}

json to_json(const Bundle& b) {
  json j = json::object();
  for (const auto& [k, v] : b) j[k] = v;
  return j;
}

json to_json(const ImportReport& r) {
  json files = json::object();
  for (const auto& [name, f] : r.files) {
    json errors = json::array();
    for (const auto& e : f.errors)
      errors.push_back({{"row", e.row}, {"column", e.column}, {"code", e.code}, {"message", e.message}});
    files[name] = {{"rows_read", f.rows_read}, {"rows_accepted", f.rows_accepted}, {"errors", errors}};
  }
  return {{"status", r.committed ? "committed" : "rejected"}, {"files", files}};
}

StagedBundle stage_bundle(const Bundle& files, const RosterTables& base, bool allow_activities) {
  StagedBundle out;
  out.tables = base;
  std::map<std::string, csv::Table> tables;
  std::vector<PendingRecord> pending;
  std::map<std::string, std::pair<const csv::Row*, SchoolLifeRecord>> school_life;

  auto report_error = [&](const std::string& file, std::size_t row, const std::string& column,
                          ErrorCode code, const std::string& message) {
    out.report.files[file].errors.push_back({row, column, std::string(to_string(code)), message});
  };

  for (const auto& [name, text] : files) {
    auto& fr = out.report.files[name];
    auto spec = specs().find(name);
    if (spec == specs().end() || (name == "activities" && !allow_activities)) {
      report_error(name, 0, "", ErrorCode::UnknownEntityType, "unknown entity file '" + name + "'");
      continue;
    }
    try {
      tables[name] = csv::parse(text);
    } catch (const Error& e) {
      std::size_t line = 0;
      std::from_chars(e.subject().data(), e.subject().data() + e.subject().size(), line);
      report_error(name, line, "", ErrorCode::MalformedCsv, e.what());
      continue;
    }
    const csv::Table& t = tables[name];
    fr.rows_read = t.rows.size();
    bool columns_ok = true;
    for (const auto& col : spec->second.required)
      if (!t.column(col)) {
        report_error(name, 1, col, ErrorCode::MalformedCsv, "missing required column '" + col + "'");
        columns_ok = false;
      }
    if (!columns_ok) continue;

    std::map<std::string, std::size_t> seen;
    for (const auto& row : t.rows) {
      RowView view{t, row};
      try {
        if (name == "activities") {
          auto when = parse_instant(view.get("timestamp"));
          if (!when) throw Error(ErrorCode::Validation, "timestamp", "timestamp: not an ISO 8601 instant");
          std::string uid = view.id("userId"), rid = view.id("resourceId");
          out.activities.push_back({uid, *when, rid, view.get("verb"), view.get("statementId")});
          continue;
        }
        if (name == "schoollife") {
          std::string key = view.id("learnerId") + "|" + view.id("classId");
          auto& slot = school_life[key];
          if (!slot.first) {
            slot.first = &row;
            slot.second.learner_id = view.get("learnerId");
            slot.second.class_id = view.get("classId");
          }
          add_school_life_entry(slot.second, view);
          continue;
        }
        RosterRecord rec = to_record(name, view);
        std::string key = record_key(rec);
        if (auto [it, fresh] = seen.emplace(key, row.line); !fresh)
          throw Error(ErrorCode::Duplicate, spec->second.required.front(),
                      "'" + key + "' already appears on line " + std::to_string(it->second));
        pending.push_back({name, &t, &row, std::move(rec)});
      } catch (const Error& e) {
        report_error(name, row.line, e.subject(), e.code(), e.what());
      }
    }
  }
  for (auto& [key, slot] : school_life)
    pending.push_back({"schoollife", &tables["schoollife"], slot.first, std::move(slot.second)});

  std::stable_sort(pending.begin(), pending.end(), [](const PendingRecord& a, const PendingRecord& b) {
    return a.record.index() < b.record.index();
  });
  for (const auto& p : pending) {
    try {
      apply_record(out.tables, p.record);
    } catch (const Error& e) {
      std::string column = e.subject();
      if (e.code() == ErrorCode::DanglingReference) column = column_holding(*p.table, *p.row, e.subject(), "");
      if (e.code() == ErrorCode::Duplicate) column = "sourcedId";
      report_error(p.file, p.row->line, column, e.code(), e.what());
    }
  }

  if (tables.contains("activities")) {
    const csv::Table& t = tables["activities"];
    for (std::size_t i = 0; i < out.activities.size(); ++i) {
      const auto& a = out.activities[i];
      if (!out.tables.users.contains(a.learner_id))
        report_error("activities", t.rows[i].line, "userId", ErrorCode::DanglingReference,
                     "user '" + a.learner_id + "' does not exist");
      if (!out.tables.resources.contains(a.resource_id))
        report_error("activities", t.rows[i].line, "resourceId", ErrorCode::DanglingReference,
                     "resource '" + a.resource_id + "' does not exist");
    }
  }

  for (auto& [name, fr] : out.report.files)
    std::stable_sort(fr.errors.begin(), fr.errors.end(),
                     [](const ImportError& a, const ImportError& b) { return a.row < b.row; });

  bool clean = std::all_of(out.report.files.begin(), out.report.files.end(),
                           [](const auto& kv) { return kv.second.errors.empty(); });
  out.report.committed = clean;
  for (auto& [name, fr] : out.report.files) fr.rows_accepted = clean ? fr.rows_read : 0;
  return out;
}

ImportReport import_csv_bundle(Store& store, const Bundle& files) {
  StagedBundle staged = stage_bundle(files, store.roster(), false);
  if (staged.report.committed) store.commit_roster(std::move(staged.tables));
  return staged.report;
}

std::string pseudonym(const std::string& salt, const std::string& id) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  HMAC(EVP_sha256(), salt.data(), static_cast<int>(salt.size()),
       reinterpret_cast<const unsigned char*>(id.data()), id.size(), digest, &len);
  return "p-" + hex(digest, 16);
}

Bundle export_pseudonymized(const Store& store, const std::string& salt, const std::set<std::string>& entities) {
  if (salt.empty()) throw Error(ErrorCode::Validation, "salt", "salt must be non-empty");
  for (const auto& e : entities)
    if (!kRosterEntities.contains(e) && e != "activities")
      throw Error(ErrorCode::UnknownEntityType, e, "unknown entity type '" + e + "'");

  const RosterTables t = store.roster();
  auto p = [&](const std::string& id) { return pseudonym(salt, id); };
  auto header = [](const std::string& entity) {
    const auto& s = specs().at(entity);
    std::vector<std::string> cols = s.required;
    cols.insert(cols.end(), s.optional.begin(), s.optional.end());
    return cols;
  };
  Bundle out;
  for (const auto& entity : entities) {
    std::string text = csv::write_row(header(entity));
    if (entity == "users") {
      for (const auto& [id, u] : t.users)
        text += csv::write_row({p(id), std::string(to_string(u.role)), "", "", ""});
    } else if (entity == "demographics") {
      for (const auto& [id, l] : t.learners) {
        std::string guardians;
        for (const auto& g : l.guardians) guardians += (guardians.empty() ? "" : ";") + p(g);
        CivilDate year{l.birth_date.year, 1, 1, true};
        text += csv::write_row({p(id), format_date(year), l.sex, l.nationality,
                                l.socio_professional_category, guardians});
      }
    } else if (entity == "classes") {
      for (const auto& [id, c] : t.classes) text += csv::write_row({id, c.subject, c.school_id, c.year});
    } else if (entity == "enrollments") {
      for (const auto& [id, e] : t.enrollments)
        text += csv::write_row({id, p(e.user_id), e.class_id, std::string(to_string(e.role))});
    } else if (entity == "results") {
      for (const auto& [id, r] : t.results)
        text += csv::write_row({id, p(r.user_id), r.skill_id, format_number(r.score), format_date(r.date)});
    } else if (entity == "resources") {
      for (const auto& [id, r] : t.resources) {
        std::vector<std::string> row{id, r.title};
        for (const auto& [col, key] : kAttributeColumns) {
          std::string value;
          for (const auto& a : r.attributes)
            if (a.rfind(key + "=", 0) == 0) value = a.substr(key.size() + 1);
          row.push_back(value);
        }
        text += csv::write_row(row);
      }
    } else if (entity == "curriculum") {
      for (const auto& [k, c] : t.curricula) {
        std::string subjects, results;
        for (const auto& s : c.grade_subjects) subjects += (subjects.empty() ? "" : ";") + s;
        for (const auto& r : c.annual_results)
          results += (results.empty() ? "" : ";") + r.subject + ":" + format_number(r.score) + ":" + r.period;
        text += csv::write_row({p(c.learner_id), c.school_year, subjects, results});
      }
    } else if (entity == "schoollife") {
      for (const auto& [k, s] : t.school_life) {
        const std::string learner = p(s.learner_id);
        std::size_t rows = 0;
        for (const auto& m : s.marks)
          ++rows, text += csv::write_row({learner, s.class_id, "mark", format_date(m.date), m.subject, format_number(m.score), "", ""});
        for (const auto& h : s.homework)
          ++rows, text += csv::write_row({learner, s.class_id, "homework", format_date(h.due), "", "", h.resource_id, ""});
        for (const auto& a : s.absences)
          ++rows, text += csv::write_row({learner, s.class_id, "absence", format_date(a.date), "", "", "", a.code});
        for (const auto& i : s.incidents)
          ++rows, text += csv::write_row({learner, s.class_id, "incident", format_date(i.date), "", "", "", i.code});
        if (rows == 0) text += csv::write_row({learner, s.class_id, "none", "", "", "", "", ""});
      }
    } else if (entity == "activities") {
      for (const auto& e : store.activity_events())
        text += csv::write_row({p(e.learner_id), format_instant(e.instant), e.resource_id, e.verb_id, p(e.statement_id)});
    }
    out[entity] = std::move(text);
  }
  return out;
}

json read_roster(const RosterTables& t, const std::string& entity, const std::map<std::string, std::string>& filters,
                 std::size_t limit, const std::optional<std::string>& cursor) {
  if (!kRosterEntities.contains(entity))
    throw Error(ErrorCode::UnknownEntityType, entity, "unknown entity type '" + entity + "'");
  if (limit < 1) throw Error(ErrorCode::BadFilter, "limit", "limit must be >= 1");
  const auto& filterable = specs().at(entity).filterable;
  for (const auto& [k, v] : filters)
    if (std::find(filterable.begin(), filterable.end(), k) == filterable.end())
      throw Error(ErrorCode::BadFilter, k, "'" + k + "' is not a filterable field of " + entity);
  std::optional<std::string> after;
  if (cursor) {
    if (cursor->size() < 3 || (*cursor)[0] != 'k' || cursor->size() % 2 == 0 ||
        !std::all_of(cursor->begin() + 1, cursor->end(), [](char c) { return std::isxdigit(static_cast<unsigned char>(c)); }))
      throw Error(ErrorCode::BadFilter, "cursor", "unknown cursor");
    after = unhex(std::string_view(*cursor).substr(1));
  }

  std::vector<std::pair<std::string, json>> rows;
  auto collect = [&](const auto& map) {
    for (const auto& [key, rec] : map) rows.emplace_back(key, record_to_json(RosterRecord{rec}));
  };
  if (entity == "users") collect(t.users);
  else if (entity == "demographics") collect(t.learners);
  else if (entity == "classes") collect(t.classes);
  else if (entity == "enrollments") collect(t.enrollments);
  else if (entity == "results") collect(t.results);
  else if (entity == "resources") collect(t.resources);
  else if (entity == "curriculum") collect(t.curricula);
  else collect(t.school_life);

  auto scalar = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
  json records = json::array();
  std::optional<std::string> more;
  std::string last_key;
  for (const auto& [key, rec] : rows) {
    if (after && key <= *after) continue;
    bool match = std::all_of(filters.begin(), filters.end(), [&](const auto& f) {
      auto it = rec.find(f.first);
      return it != rec.end() && scalar(*it) == f.second;
    });
    if (!match) continue;
    if (records.size() == limit) {
      more = "k" + hex(reinterpret_cast<const unsigned char*>(last_key.data()), last_key.size());
      break;
    }
    records.push_back(rec);
    last_key = key;
  }
  json out = {{"records", records}};
  if (more) out["more"] = *more;
  return out;
}

http::Response RosterService::import(const http::Request& req) {
  try {
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded()) throw Error(ErrorCode::Validation, "$", "body is not valid JSON");
    auto report = import_csv_bundle(store_, bundle_from_json(body));
    return http::json_response(report.committed ? 200 : 400, to_json(report));
  } catch (const Error& e) {
    return http::error_response(e);
  }
}

http::Response RosterService::read(const std::string& entity, const http::Request& req) {
  try {
    std::map<std::string, std::string> filters;
    std::size_t limit = 100;
    std::optional<std::string> cursor;
    for (const auto& [k, v] : req.params) {
      if (k == "limit") {
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), limit);
        if (ec != std::errc{} || p != v.data() + v.size())
          throw Error(ErrorCode::BadFilter, "limit", "limit must be an integer");
      } else if (k == "cursor") {
        cursor = v;
      } else {
        filters[k] = v;
      }
    }
    return http::json_response(200, read_roster(store_.roster(), entity, filters, limit, cursor));
  } catch (const Error& e) {
    return http::error_response(e);
  }
}

http::Response RosterService::export_bundle(const http::Request& req) {
  try {
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) throw Error(ErrorCode::Validation, "$", "body must be an object");
    std::string salt = body.value("salt", std::string());
    std::set<std::string> entities = kRosterEntities;
    entities.insert("activities");
    if (body.contains("entities")) entities = body.at("entities").get<std::set<std::string>>();
    return http::json_response(200, to_json(export_pseudonymized(store_, salt, entities)));
  } catch (const Error& e) {
    return http::error_response(e);
  } catch (const json::exception& e) {
    return http::error_response(Error(ErrorCode::Validation, "entities", e.what()));
  }
}

}  // namespace metal
