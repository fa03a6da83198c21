#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace metal::gaze {

struct Fixation {
  double x = 0;
  double y = 0;
  double duration_ms = 0;
  double onset_ms = 0;
};

struct GazeTrial {
  std::string subject;
  std::string trial;
  std::vector<Fixation> fixations;  // onset-ordered
  std::optional<bool> recalled;
  std::optional<double> score;
};

/// Reads `subject,trial,x,y,duration_ms,onset_ms,recalled[,score]`.
/// Trials come out ordered by (subject, trial) with fixations sorted by
/// onset. Throws MalformedRow ("line N, column C") or NonMonotonicOnsets.
std::vector<GazeTrial> parse_fixation_log(std::string_view csv_text);

/// Saccade-derived features; empty optionals are non-computable.
struct GazeFeatures {
  std::size_t fixation_count = 0;
  double scanpath_length = 0;
  std::optional<double> horizontal_amplitude;  // mean |dx| per saccade
  std::optional<double> relative_angle_sum;    // radians, unsigned turning angles
  std::optional<double> relative_angle_std;    // population std, needs >= 2 angles
  std::vector<double> relative_angles;
};

GazeFeatures gaze_features(const GazeTrial& trial);

inline constexpr const char* kFeatureNames[] = {"fixation_count", "scanpath_length",
                                                "horizontal_saccade_amplitude",
                                                "relative_angle_sum", "relative_angle_std"};

/// Feature by name; empty when non-computable.
std::optional<double> feature_value(const GazeFeatures& f, std::string_view name);

struct ReportOptions {
  std::size_t permutations = 10'000;
  std::uint64_t seed = 1;
};

/// One record per feature and applicable test: ANOVA over binary recall
/// groups, correlation against numeric scores when every trial has one.
/// Test preconditions that fail are reported in an `error` field.
std::vector<nlohmann::json> gaze_report(const std::vector<GazeTrial>& trials, const ReportOptions& opts);

}  // namespace metal::gaze
