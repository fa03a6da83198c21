#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "metal/time.hpp"

namespace metal {

enum class UserRole { Learner, Teacher, Guardian };
enum class EnrollmentRole { Learner, Teacher };

std::string_view to_string(UserRole r);
std::string_view to_string(EnrollmentRole r);
std::optional<UserRole> parse_user_role(std::string_view s);
std::optional<EnrollmentRole> parse_enrollment_role(std::string_view s);

struct User {
  std::string id;
  UserRole role = UserRole::Learner;
  std::string given_name;
  std::string family_name;
  std::string email;
  friend bool operator==(const User&, const User&) = default;
};

/// Demographic record of a learner; `id` is the learner's user id.
struct LearnerRecord {
  std::string id;
  CivilDate birth_date;
  std::string sex;  // M, F or X
  std::string nationality;
  std::string socio_professional_category;
  std::vector<std::string> guardians;
  friend bool operator==(const LearnerRecord&, const LearnerRecord&) = default;
};

struct AnnualResult {
  std::string subject;
  double score = 0;  // [0, 20]
  std::string period;
  friend bool operator==(const AnnualResult&, const AnnualResult&) = default;
};

struct CurriculumRecord {
  std::string learner_id;
  std::string school_year;  // e.g. 2018-2019
  std::set<std::string> grade_subjects;  // e.g. Mathematics-grade-9
  std::vector<AnnualResult> annual_results;
  friend bool operator==(const CurriculumRecord&, const CurriculumRecord&) = default;
};

struct Mark {
  std::string subject;  // skill id or subject
  double score = 0;     // [0, 20]
  CivilDate date;
  friend bool operator==(const Mark&, const Mark&) = default;
};
struct Homework {
  CivilDate due;
  std::string resource_id;
  friend bool operator==(const Homework&, const Homework&) = default;
};
struct DatedCode {
  CivilDate date;
  std::string code;
  friend bool operator==(const DatedCode&, const DatedCode&) = default;
};

struct SchoolLifeRecord {
  std::string learner_id;
  std::string class_id;
  std::vector<Mark> marks;
  std::vector<Homework> homework;
  std::vector<DatedCode> absences;
  std::vector<DatedCode> incidents;
  friend bool operator==(const SchoolLifeRecord&, const SchoolLifeRecord&) = default;
};

struct ResourceRecord {
  std::string id;
  std::string title;
  std::set<std::string> attributes;  // key=value labels
  friend bool operator==(const ResourceRecord&, const ResourceRecord&) = default;
};

struct ClassSection {
  std::string id;
  std::string school_id;
  std::string subject;
  std::string year;
  friend bool operator==(const ClassSection&, const ClassSection&) = default;
};

struct Enrollment {
  std::string id;
  std::string user_id;
  std::string class_id;
  EnrollmentRole role = EnrollmentRole::Learner;
  friend bool operator==(const Enrollment&, const Enrollment&) = default;
};

struct SkillResult {
  std::string id;
  std::string user_id;
  std::string skill_id;
  double score = 0;  // [0, 1]
  CivilDate date;
  friend bool operator==(const SkillResult&, const SkillResult&) = default;
};

using RosterRecord = std::variant<User, LearnerRecord, ClassSection, Enrollment, SkillResult,
                                  ResourceRecord, CurriculumRecord, SchoolLifeRecord>;

/// Attribute keys a resource may carry.
inline const std::set<std::string, std::less<>> kResourceAttributeKeys = {
    "subject", "resource-type", "publisher", "grade-level"};

/// All roster tables, keyed by record key. Ordered maps keep every listing
/// and serialization id-ordered.
struct RosterTables {
  std::map<std::string, User> users;
  std::map<std::string, LearnerRecord> learners;
  std::map<std::string, ClassSection> classes;
  std::map<std::string, Enrollment> enrollments;
  std::map<std::string, SkillResult> results;
  std::map<std::string, ResourceRecord> resources;
  std::map<std::string, CurriculumRecord> curricula;    // learner|year
  std::map<std::string, SchoolLifeRecord> school_life;  // learner|class

  friend bool operator==(const RosterTables&, const RosterTables&) = default;
};

std::string record_key(const RosterRecord& r);
std::string_view entity_name(const RosterRecord& r);

/// Validates the record, checks its references against `tables` and
/// applies it (insert or replace). Throws Validation, DanglingReference or
/// Duplicate; `tables` is untouched on error.
void apply_record(RosterTables& tables, const RosterRecord& r);

/// Full-scan check; returns the first missing reference, if any.
std::optional<std::string> find_dangling_reference(const RosterTables& tables);

/// [start, end) of a `YYYY-YYYY` school year (Sept 1 to Sept 1).
std::optional<std::pair<CivilDate, CivilDate>> school_year_bounds(std::string_view label);

nlohmann::json to_json(const RosterTables& t);
RosterTables roster_from_json(const nlohmann::json& j);
nlohmann::json record_to_json(const RosterRecord& r);

/// Holistic user-model join: demographic labels (age at `reference`, sex),
/// curriculum grade-subject labels and class labels from school life.
/// Throws Error(UnknownLearner).
std::set<std::string> resolve_learner_context(const RosterTables& t, std::string_view learner_id,
                                              const CivilDate& reference);

}  // namespace metal
