#include "metal/roster.hpp"

#include <charconv>

#include "metal/error.hpp"
#include "metal/ids.hpp"

namespace metal {

using nlohmann::json;

std::string_view to_string(UserRole r) {
  switch (r) {
    case UserRole::Learner: return "learner";
    case UserRole::Teacher: return "teacher";
    case UserRole::Guardian: return "guardian";
  }
  return "learner";
}

std::string_view to_string(EnrollmentRole r) {
  return r == EnrollmentRole::Teacher ? "teacher" : "learner";
}

std::optional<UserRole> parse_user_role(std::string_view s) {
  if (s == "learner" || s == "student") return UserRole::Learner;
  if (s == "teacher") return UserRole::Teacher;
  if (s == "guardian" || s == "parent") return UserRole::Guardian;
  return std::nullopt;
}

std::optional<EnrollmentRole> parse_enrollment_role(std::string_view s) {
  if (s == "learner" || s == "student") return EnrollmentRole::Learner;
  if (s == "teacher") return EnrollmentRole::Teacher;
  return std::nullopt;
}

namespace {

[[noreturn]] void invalid(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::Validation, field, field + ": " + why);
}

[[noreturn]] void dangling(const std::string& target, const std::string& what) {
  throw Error(ErrorCode::DanglingReference, target, what + " '" + target + "' does not exist");
}

void check_id(const std::string& id, const char* field) {
  if (!is_roster_id(id)) invalid(field, "must be an opaque id of 1..64 characters");
}

void check_score(double v, double lo, double hi, const char* field) {
  if (!(v >= lo && v <= hi))
    invalid(field, "score out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
}

bool within_year(const ClassSection& c, const CivilDate& d) {
  auto bounds = school_year_bounds(c.year);
  if (!bounds || d.year_only) return true;
  return d >= bounds->first && d < bounds->second;
}

struct Applier {
  RosterTables& t;

  void operator()(const User& u) {
    check_id(u.id, "sourcedId");
    if (!u.email.empty() && u.email.find('@') == std::string::npos)
      invalid("email", "must be an address");
    t.users[u.id] = u;
  }

  void operator()(const LearnerRecord& l) {
    check_id(l.id, "userId");
    if (!t.users.contains(l.id)) dangling(l.id, "user");
    if (!is_valid(l.birth_date)) invalid("birthDate", "invalid date");
    if (l.sex != "M" && l.sex != "F" && l.sex != "X") invalid("sex", "must be M, F or X");
    for (const auto& g : l.guardians)
      if (!t.users.contains(g)) dangling(g, "guardian");
    t.learners[l.id] = l;
  }

  void operator()(const ClassSection& c) {
    check_id(c.id, "sourcedId");
    if (c.subject.empty()) invalid("subject", "required");
    t.classes[c.id] = c;
  }

  void operator()(const Enrollment& e) {
    check_id(e.id, "sourcedId");
    if (!t.users.contains(e.user_id)) dangling(e.user_id, "user");
    if (!t.classes.contains(e.class_id)) dangling(e.class_id, "class");
    for (const auto& [id, other] : t.enrollments)
      if (id != e.id && other.user_id == e.user_id && other.class_id == e.class_id &&
          other.role == e.role)
        throw Error(ErrorCode::Duplicate, e.id,
                    "enrollment (" + e.user_id + ", " + e.class_id + ", " +
                        std::string(to_string(e.role)) + ") already exists as '" + id + "'");
    t.enrollments[e.id] = e;
  }

  void operator()(const SkillResult& r) {
    check_id(r.id, "sourcedId");
    if (r.skill_id.empty()) invalid("skillId", "required");
    check_score(r.score, 0.0, 1.0, "score");
    if (!is_valid(r.date) || r.date.year_only) invalid("date", "invalid date");
    if (!t.users.contains(r.user_id)) dangling(r.user_id, "user");
    t.results[r.id] = r;
  }

  void operator()(const ResourceRecord& r) {
    check_id(r.id, "sourcedId");
    for (const auto& a : r.attributes) {
      auto eq = a.find('=');
      if (eq == std::string::npos || eq + 1 == a.size() ||
          !kResourceAttributeKeys.contains(a.substr(0, eq)))
        invalid("attributes", "'" + a + "' is not a key=value label over the declared keys");
    }
    t.resources[r.id] = r;
  }

  void operator()(const CurriculumRecord& c) {
    if (!t.learners.contains(c.learner_id)) dangling(c.learner_id, "learner");
    if (c.school_year.empty()) invalid("schoolYear", "required");
    for (const auto& r : c.annual_results) check_score(r.score, 0.0, 20.0, "annualResults");
    t.curricula[record_key(c)] = c;
  }

  void operator()(const SchoolLifeRecord& s) {
    if (!t.learners.contains(s.learner_id)) dangling(s.learner_id, "learner");
    auto cls = t.classes.find(s.class_id);
    if (cls == t.classes.end()) dangling(s.class_id, "class");
    for (const auto& m : s.marks) {
      check_score(m.score, 0.0, 20.0, "marks.score");
      if (!within_year(cls->second, m.date)) invalid("marks.date", "outside the school year");
    }
    for (const auto& h : s.homework) {
      if (!h.resource_id.empty() && !t.resources.contains(h.resource_id))
        dangling(h.resource_id, "resource");
      if (!within_year(cls->second, h.due)) invalid("homework.dueDate", "outside the school year");
    }
    for (const auto& a : s.absences)
      if (!within_year(cls->second, a.date)) invalid("absences.date", "outside the school year");
    for (const auto& i : s.incidents)
      if (!within_year(cls->second, i.date)) invalid("incidents.date", "outside the school year");
    t.school_life[record_key(s)] = s;
  }
};

json date_json(const CivilDate& d) { return format_date(d); }
CivilDate date_from(const json& j) {
  auto d = parse_date(j.get<std::string>());
  if (!d) throw Error(ErrorCode::Storage, "date", "corrupt date in roster table");
  return *d;
}

json to_json_rec(const User& u) {
  return {{"id", u.id}, {"role", to_string(u.role)}, {"givenName", u.given_name},
          {"familyName", u.family_name}, {"email", u.email}};
}
json to_json_rec(const LearnerRecord& l) {
  return {{"id", l.id}, {"birthDate", date_json(l.birth_date)}, {"sex", l.sex},
          {"nationality", l.nationality}, {"socioProfessionalCategory", l.socio_professional_category},
          {"guardians", l.guardians}};
}
json to_json_rec(const ClassSection& c) {
  return {{"id", c.id}, {"schoolId", c.school_id}, {"subject", c.subject}, {"year", c.year}};
}
json to_json_rec(const Enrollment& e) {
  return {{"id", e.id}, {"userId", e.user_id}, {"classId", e.class_id}, {"role", to_string(e.role)}};
}
json to_json_rec(const SkillResult& r) {
  return {{"id", r.id}, {"userId", r.user_id}, {"skillId", r.skill_id}, {"score", r.score},
          {"date", date_json(r.date)}};
}
json to_json_rec(const ResourceRecord& r) {
  return {{"id", r.id}, {"title", r.title}, {"attributes", r.attributes}};
}
json to_json_rec(const CurriculumRecord& c) {
  json results = json::array();
  for (const auto& r : c.annual_results)
    results.push_back({{"subject", r.subject}, {"score", r.score}, {"period", r.period}});
  return {{"learnerId", c.learner_id}, {"schoolYear", c.school_year},
          {"gradeSubjects", c.grade_subjects}, {"annualResults", results}};
}
json to_json_rec(const SchoolLifeRecord& s) {
  json marks = json::array(), homework = json::array(), absences = json::array(),
       incidents = json::array();
  for (const auto& m : s.marks)
    marks.push_back({{"subject", m.subject}, {"score", m.score}, {"date", date_json(m.date)}});
  for (const auto& h : s.homework)
    homework.push_back({{"dueDate", date_json(h.due)}, {"resourceId", h.resource_id}});
  for (const auto& a : s.absences) absences.push_back({{"date", date_json(a.date)}, {"code", a.code}});
  for (const auto& i : s.incidents)
    incidents.push_back({{"date", date_json(i.date)}, {"code", i.code}});
  return {{"learnerId", s.learner_id}, {"classId", s.class_id}, {"marks", marks},
          {"homework", homework}, {"absences", absences}, {"incidents", incidents}};
}

template <class Map>
json table_json(const Map& m) {
  json out = json::array();
  for (const auto& [k, v] : m) out.push_back(to_json_rec(v));
  return out;
}

}  // namespace

std::string record_key(const RosterRecord& r) {
  return std::visit(
      [](const auto& rec) -> std::string {
        using T = std::decay_t<decltype(rec)>;
        if constexpr (std::is_same_v<T, CurriculumRecord>)
          return rec.learner_id + "|" + rec.school_year;
        else if constexpr (std::is_same_v<T, SchoolLifeRecord>)
          return rec.learner_id + "|" + rec.class_id;
        else
          return rec.id;
      },
      r);
}

std::string_view entity_name(const RosterRecord& r) {
  static constexpr std::string_view names[] = {"users",     "demographics", "classes",
                                               "enrollments", "results",    "resources",
                                               "curriculum", "schoollife"};
  return names[r.index()];
}

void apply_record(RosterTables& tables, const RosterRecord& r) {
  std::visit(Applier{tables}, r);
}

std::optional<std::string> find_dangling_reference(const RosterTables& t) {
  for (const auto& [id, l] : t.learners) {
    if (!t.users.contains(id)) return id;
    for (const auto& g : l.guardians)
      if (!t.users.contains(g)) return g;
  }
  for (const auto& [id, e] : t.enrollments) {
    if (!t.users.contains(e.user_id)) return e.user_id;
    if (!t.classes.contains(e.class_id)) return e.class_id;
  }
  for (const auto& [id, r] : t.results)
    if (!t.users.contains(r.user_id)) return r.user_id;
  for (const auto& [k, c] : t.curricula)
    if (!t.learners.contains(c.learner_id)) return c.learner_id;
  for (const auto& [k, s] : t.school_life) {
    if (!t.learners.contains(s.learner_id)) return s.learner_id;
    if (!t.classes.contains(s.class_id)) return s.class_id;
    for (const auto& h : s.homework)
      if (!h.resource_id.empty() && !t.resources.contains(h.resource_id)) return h.resource_id;
  }
  return std::nullopt;
}

std::optional<std::pair<CivilDate, CivilDate>> school_year_bounds(std::string_view label) {
  int a = 0, b = 0;
  if (label.size() != 9 || label[4] != '-') return std::nullopt;
  auto r1 = std::from_chars(label.data(), label.data() + 4, a);
  auto r2 = std::from_chars(label.data() + 5, label.data() + 9, b);
  if (r1.ec != std::errc{} || r2.ec != std::errc{} || b != a + 1) return std::nullopt;
  return std::pair{CivilDate{a, 9, 1}, CivilDate{b, 9, 1}};
}

json record_to_json(const RosterRecord& r) {
  return std::visit([](const auto& rec) { return to_json_rec(rec); }, r);
}

json to_json(const RosterTables& t) {
  return {{"users", table_json(t.users)},         {"demographics", table_json(t.learners)},
          {"classes", table_json(t.classes)},     {"enrollments", table_json(t.enrollments)},
          {"results", table_json(t.results)},     {"resources", table_json(t.resources)},
          {"curriculum", table_json(t.curricula)}, {"schoollife", table_json(t.school_life)}};
}

RosterTables roster_from_json(const json& j) {
  RosterTables t;
  for (const auto& u : j.value("users", json::array())) {
    User x{u.at("id"), *parse_user_role(u.at("role").get<std::string>()), u.at("givenName"),
           u.at("familyName"), u.at("email")};
    t.users[x.id] = x;
  }
  for (const auto& l : j.value("demographics", json::array())) {
    LearnerRecord x{l.at("id"), date_from(l.at("birthDate")), l.at("sex"), l.at("nationality"),
                    l.at("socioProfessionalCategory"), l.at("guardians")};
    t.learners[x.id] = x;
  }
  for (const auto& c : j.value("classes", json::array())) {
    ClassSection x{c.at("id"), c.at("schoolId"), c.at("subject"), c.at("year")};
    t.classes[x.id] = x;
  }
  for (const auto& e : j.value("enrollments", json::array())) {
    Enrollment x{e.at("id"), e.at("userId"), e.at("classId"),
                 *parse_enrollment_role(e.at("role").get<std::string>())};
    t.enrollments[x.id] = x;
  }
  for (const auto& r : j.value("results", json::array())) {
    SkillResult x{r.at("id"), r.at("userId"), r.at("skillId"), r.at("score"), date_from(r.at("date"))};
    t.results[x.id] = x;
  }
  for (const auto& r : j.value("resources", json::array())) {
    ResourceRecord x{r.at("id"), r.at("title"), r.at("attributes")};
    t.resources[x.id] = x;
  }
  for (const auto& c : j.value("curriculum", json::array())) {
    CurriculumRecord x{c.at("learnerId"), c.at("schoolYear"), c.at("gradeSubjects"), {}};
    for (const auto& r : c.at("annualResults"))
      x.annual_results.push_back({r.at("subject"), r.at("score"), r.at("period")});
    t.curricula[record_key(x)] = x;
  }
  for (const auto& s : j.value("schoollife", json::array())) {
    SchoolLifeRecord x{s.at("learnerId"), s.at("classId"), {}, {}, {}, {}};
    for (const auto& m : s.at("marks"))
      x.marks.push_back({m.at("subject"), m.at("score"), date_from(m.at("date"))});
    for (const auto& h : s.at("homework"))
      x.homework.push_back({date_from(h.at("dueDate")), h.at("resourceId")});
    for (const auto& a : s.at("absences")) x.absences.push_back({date_from(a.at("date")), a.at("code")});
    for (const auto& i : s.at("incidents"))
      x.incidents.push_back({date_from(i.at("date")), i.at("code")});
    t.school_life[record_key(x)] = x;
  }
  return t;
}

std::set<std::string> resolve_learner_context(const RosterTables& t, std::string_view learner_id,
                                              const CivilDate& reference) {
  std::string id(learner_id);
  auto learner = t.learners.find(id);
  if (learner == t.learners.end() && !t.users.contains(id))
    throw Error(ErrorCode::UnknownLearner, id, "unknown learner '" + id + "'");

  std::set<std::string> labels;
  if (learner != t.learners.end()) {
    labels.insert("age=" + std::to_string(age_in_years(learner->second.birth_date, reference)));
    labels.insert("sex=" + learner->second.sex);
  }

  // Grade-subject labels from the school year containing the reference date;
  // all years when no year label covers it.
  std::vector<const CurriculumRecord*> records;
  bool any_current = false;
  for (auto it = t.curricula.lower_bound(id + "|"); it != t.curricula.end(); ++it) {
    if (it->second.learner_id != id) break;
    records.push_back(&it->second);
    auto bounds = school_year_bounds(it->second.school_year);
    if (bounds && reference >= bounds->first && reference < bounds->second) any_current = true;
  }
  for (const auto* c : records) {
    if (any_current) {
      auto bounds = school_year_bounds(c->school_year);
      if (!bounds || reference < bounds->first || reference >= bounds->second) continue;
    }
    labels.insert(c->grade_subjects.begin(), c->grade_subjects.end());
  }

  for (auto it = t.school_life.lower_bound(id + "|"); it != t.school_life.end(); ++it) {
    if (it->second.learner_id != id) break;
    labels.insert("class=" + it->second.class_id);
  }
  return labels;
}

}  // namespace metal
