#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "metal/sequence_db.hpp"
#include "metal/store.hpp"

namespace metal::indicators {

/// Half-open interval [from, to).
struct Window {
  Instant from{};
  Instant to{};
  Millis length() const { return to - from; }
};

/// Tunable proxies for effort and engagement.
struct IndicatorConfig {
  Millis bucket = kDay;
  Millis session_gap = mining::kDefaultSessionGap;
  Millis effort_cap{10 * 60'000};
};

struct SeriesPoint {
  Instant start{};
  double value = 0;
  std::map<std::string, double> aux;
};

struct IndicatorSeries {
  std::string subject_id;
  std::string indicator;
  std::vector<SeriesPoint> points;
};

nlohmann::json to_json(const IndicatorSeries& s);

/// Store state the indicators read: roster plus derived activity events.
struct IndicatorData {
  RosterTables roster;
  std::vector<ActivityEvent> events;

  static IndicatorData from(const Store& store);
};

// Kernels over plain values.

/// r_i = sqrt(c_i) / sqrt(max c); all zeros map to zeros.
std::vector<double> pulse_radii(std::span<const std::size_t> counts);
/// Active buckets (>= 1 event) over total day buckets of the window.
double engagement(std::span<const Instant> events, const Window& w);
/// Sum over consecutive same-session gaps of min(gap, cap), in minutes.
double effort_minutes(std::span<const Instant> events, const Window& w, Millis session_gap,
                      Millis cap);

// Store-backed operations. Unknown learners throw Error(UnknownLearner).

IndicatorSeries activity_pulse(const IndicatorData& d, const std::string& learner, const Window& w,
                               const IndicatorConfig& cfg = {});
double engagement_indicator(const IndicatorData& d, const std::string& learner, const Window& w);
double effort_indicator(const IndicatorData& d, const std::string& learner, const Window& w,
                        const IndicatorConfig& cfg = {});
/// Subject is a learner or a class; the class series averages the
/// per-learner bucket means of its enrolled learners. Buckets without data
/// are omitted. Throws Error(UnknownSkill).
IndicatorSeries skill_evolution(const IndicatorData& d, const std::string& subject,
                                const std::string& skill, const Window& w,
                                const IndicatorConfig& cfg = {});

/// Dashboard payloads for the learner and class endpoints.
nlohmann::json learner_report(const IndicatorData& d, const std::string& learner, const Window& w,
                              const IndicatorConfig& cfg = {});
nlohmann::json class_report(const IndicatorData& d, const std::string& class_id, const Window& w,
                            const IndicatorConfig& cfg = {});

}  // namespace metal::indicators
