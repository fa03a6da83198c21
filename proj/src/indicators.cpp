#include "metal/indicators.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "metal/error.hpp"

namespace metal::indicators {

namespace {

void require_window(const Window& w) {
  if (w.to <= w.from) throw Error(ErrorCode::Validation, "window", "window must be non-empty");
}

void require_learner(const IndicatorData& d, const std::string& id) {
  if (!d.roster.users.contains(id) && !d.roster.learners.contains(id))
    throw Error(ErrorCode::UnknownLearner, id, "unknown learner '" + id + "'");
}

std::vector<Instant> learner_instants(const IndicatorData& d, const std::string& learner, const Window& w) {
  std::vector<Instant> out;
  for (const auto& e : d.events)
    if (e.learner_id == learner && e.instant >= w.from && e.instant < w.to) out.push_back(e.instant);
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t bucket_count(const Window& w, Millis bucket) {
  return static_cast<std::size_t>((w.length().count() + bucket.count() - 1) / bucket.count());
}

}  // namespace

nlohmann::json to_json(const IndicatorSeries& s) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : s.points) {
    nlohmann::json j = {{"start", format_instant(p.start)}, {"value", p.value}};
    for (const auto& [k, v] : p.aux) j[k] = v;
    points.push_back(j);
  }
  return {{"subject", s.subject_id}, {"indicator", s.indicator}, {"points", points}};
}

IndicatorData IndicatorData::from(const Store& store) {
  return {store.roster(), store.activity_events()};
}

std::vector<double> pulse_radii(std::span<const std::size_t> counts) {
  std::size_t max = counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
  std::vector<double> radii(counts.size(), 0.0);
  if (max == 0) return radii;
  const double scale = 1.0 / std::sqrt(static_cast<double>(max));
  for (std::size_t i = 0; i < counts.size(); ++i)
    radii[i] = counts[i] == max ? 1.0 : scale * std::sqrt(static_cast<double>(counts[i]));
  return radii;
}

double engagement(std::span<const Instant> events, const Window& w) {
  if (w.length() < kDay) throw Error(ErrorCode::Validation, "window", "window must span at least one day");
  const std::size_t days = bucket_count(w, kDay);
  std::set<std::size_t> active;
  for (Instant t : events)
    if (t >= w.from && t < w.to) active.insert(static_cast<std::size_t>((t - w.from) / kDay));
  return static_cast<double>(active.size()) / static_cast<double>(days);
}

double effort_minutes(std::span<const Instant> events, const Window& w, Millis session_gap, Millis cap) {
  std::vector<Instant> in;
  for (Instant t : events)
    if (t >= w.from && t < w.to) in.push_back(t);
  std::sort(in.begin(), in.end());
  Millis total{0};
  for (std::size_t i = 1; i < in.size(); ++i) {
    Millis gap = in[i] - in[i - 1];
    if (gap > session_gap) continue;  // opens a new session
    total += std::min(gap, cap);
  }
  return static_cast<double>(total.count()) / 60'000.0;
}

IndicatorSeries activity_pulse(const IndicatorData& d, const std::string& learner, const Window& w,
                               const IndicatorConfig& cfg) {
  require_window(w);
  require_learner(d, learner);
  std::vector<std::size_t> counts(bucket_count(w, cfg.bucket), 0);
  for (Instant t : learner_instants(d, learner, w)) ++counts[static_cast<std::size_t>((t - w.from) / cfg.bucket)];
  auto radii = pulse_radii(counts);
  IndicatorSeries s{learner, "pulse", {}};
  for (std::size_t i = 0; i < counts.size(); ++i)
    s.points.push_back({w.from + cfg.bucket * static_cast<long>(i), static_cast<double>(counts[i]),
                        {{"count", static_cast<double>(counts[i])}, {"radius", radii[i]}}});
  return s;
}

double engagement_indicator(const IndicatorData& d, const std::string& learner, const Window& w) {
  require_learner(d, learner);
  auto instants = learner_instants(d, learner, w);
  return engagement(instants, w);
}

double effort_indicator(const IndicatorData& d, const std::string& learner, const Window& w,
                        const IndicatorConfig& cfg) {
  require_window(w);
  require_learner(d, learner);
  auto instants = learner_instants(d, learner, w);
  return effort_minutes(instants, w, cfg.session_gap, cfg.effort_cap);
}

IndicatorSeries skill_evolution(const IndicatorData& d, const std::string& subject,
                                const std::string& skill, const Window& w, const IndicatorConfig& cfg) {
  require_window(w);
  bool known = std::any_of(d.roster.results.begin(), d.roster.results.end(),
                           [&](const auto& kv) { return kv.second.skill_id == skill; });
  if (!known) throw Error(ErrorCode::UnknownSkill, skill, "unknown skill '" + skill + "'");

  std::set<std::string> learners;
  if (d.roster.classes.contains(subject)) {
    for (const auto& [id, e] : d.roster.enrollments)
      if (e.class_id == subject && e.role == EnrollmentRole::Learner) learners.insert(e.user_id);
  } else {
    require_learner(d, subject);
    learners.insert(subject);
  }

  // bucket -> learner -> (sum, n)
  std::map<std::size_t, std::map<std::string, std::pair<double, std::size_t>>> acc;
  for (const auto& [id, r] : d.roster.results) {
    if (r.skill_id != skill || !learners.contains(r.user_id)) continue;
    Instant t = start_of_day(r.date);
    if (t < w.from || t >= w.to) continue;
    auto& cell = acc[static_cast<std::size_t>((t - w.from) / cfg.bucket)][r.user_id];
    cell.first += r.score;
    ++cell.second;
  }
  IndicatorSeries s{subject, "skill:" + skill, {}};
  for (const auto& [bucket, per_learner] : acc) {
    double sum = 0;
    for (const auto& [learner, cell] : per_learner) sum += cell.first / static_cast<double>(cell.second);
    s.points.push_back({w.from + cfg.bucket * static_cast<long>(bucket),
                        sum / static_cast<double>(per_learner.size()),
                        {{"learners", static_cast<double>(per_learner.size())}}});
  }
  return s;
}

nlohmann::json learner_report(const IndicatorData& d, const std::string& learner, const Window& w,
                              const IndicatorConfig& cfg) {
  nlohmann::json out = {{"learner", learner},
                        {"from", format_instant(w.from)},
                        {"to", format_instant(w.to)},
                        {"pulse", to_json(activity_pulse(d, learner, w, cfg))},
                        {"effort_minutes", effort_indicator(d, learner, w, cfg)}};
  if (w.length() >= kDay) out["engagement"] = engagement_indicator(d, learner, w);
  nlohmann::json skills = nlohmann::json::array();
  std::set<std::string> skill_ids;
  for (const auto& [id, r] : d.roster.results)
    if (r.user_id == learner) skill_ids.insert(r.skill_id);
  for (const auto& skill : skill_ids) skills.push_back(to_json(skill_evolution(d, learner, skill, w, cfg)));
  out["skills"] = skills;
  return out;
}

nlohmann::json class_report(const IndicatorData& d, const std::string& class_id, const Window& w,
                            const IndicatorConfig& cfg) {
  if (!d.roster.classes.contains(class_id))
    throw Error(ErrorCode::DanglingReference, class_id, "unknown class '" + class_id + "'");
  std::set<std::string> learners;
  for (const auto& [id, e] : d.roster.enrollments)
    if (e.class_id == class_id && e.role == EnrollmentRole::Learner) learners.insert(e.user_id);
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& l : learners) {
    nlohmann::json row = {{"learner", l},
                          {"pulse", to_json(activity_pulse(d, l, w, cfg))},
                          {"effort_minutes", effort_indicator(d, l, w, cfg)}};
    if (w.length() >= kDay) row["engagement"] = engagement_indicator(d, l, w);
    rows.push_back(row);
  }
  std::set<std::string> skill_ids;
  for (const auto& [id, r] : d.roster.results)
    if (learners.contains(r.user_id)) skill_ids.insert(r.skill_id);
  nlohmann::json skills = nlohmann::json::array();
  for (const auto& skill : skill_ids) skills.push_back(to_json(skill_evolution(d, class_id, skill, w, cfg)));
  return {{"class", class_id},         {"from", format_instant(w.from)}, {"to", format_instant(w.to)},
          {"learners", rows},          {"skills", skills}};
}

}  // namespace metal::indicators
