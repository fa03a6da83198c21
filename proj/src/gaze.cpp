#include "metal/gaze.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>

#include "metal/csv.hpp"
#include "metal/error.hpp"
#include "metal/permutation.hpp"

namespace metal::gaze {

namespace {

[[noreturn]] void malformed(std::size_t line, std::string_view column, const std::string& why) {
  std::string where = "line " + std::to_string(line) + ", column " + std::string(column);
  throw Error(ErrorCode::MalformedRow, where, where + ": " + why);
}

double number(const std::string& text, std::size_t line, std::string_view column) {
  double v = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || p != text.data() + text.size() || !std::isfinite(v))
    malformed(line, column, "'" + text + "' is not a number");
  return v;
}

std::optional<bool> flag(const std::string& text, std::size_t line) {
  if (text.empty()) return std::nullopt;
  if (text == "1" || text == "true") return true;
  if (text == "0" || text == "false") return false;
  malformed(line, "recalled", "expected 0/1");
}

}  // namespace

std::vector<GazeTrial> parse_fixation_log(std::string_view text) {
  csv::Table table;
  try {
    table = csv::parse(text);
  } catch (const Error& e) {
    throw Error(ErrorCode::MalformedRow, "line " + e.subject(), e.what());
  }
  static constexpr std::string_view required[] = {"subject", "trial",    "x",       "y",
                                                  "duration_ms", "onset_ms", "recalled"};
  std::size_t col[7];
  for (std::size_t i = 0; i < 7; ++i) {
    auto c = table.column(required[i]);
    if (!c) malformed(1, required[i], "missing column");
    col[i] = *c;
  }
  auto score_col = table.column("score");

  std::map<std::pair<std::string, std::string>, GazeTrial> trials;
  for (const auto& row : table.rows) {
    const auto& f = row.fields;
    if (f[col[0]].empty()) malformed(row.line, "subject", "empty");
    if (f[col[1]].empty()) malformed(row.line, "trial", "empty");
    Fixation fx{number(f[col[2]], row.line, "x"), number(f[col[3]], row.line, "y"),
                number(f[col[4]], row.line, "duration_ms"), number(f[col[5]], row.line, "onset_ms")};
    if (fx.duration_ms <= 0) malformed(row.line, "duration_ms", "duration must be positive");
    auto recalled = flag(f[col[6]], row.line);
    std::optional<double> score;
    if (score_col && !f[*score_col].empty()) score = number(f[*score_col], row.line, "score");

    auto [it, inserted] = trials.try_emplace({f[col[0]], f[col[1]]});
    GazeTrial& t = it->second;
    if (inserted) {
      t.subject = f[col[0]];
      t.trial = f[col[1]];
      t.recalled = recalled;
      t.score = score;
    } else if (t.recalled != recalled) {
      malformed(row.line, "recalled", "differs from earlier rows of the same trial");
    } else if (t.score != score) {
      malformed(row.line, "score", "differs from earlier rows of the same trial");
    }
    t.fixations.push_back(fx);
  }

  std::vector<GazeTrial> out;
  for (auto& [key, t] : trials) {
    std::stable_sort(t.fixations.begin(), t.fixations.end(),
                     [](const Fixation& a, const Fixation& b) { return a.onset_ms < b.onset_ms; });
    for (std::size_t i = 1; i < t.fixations.size(); ++i)
      if (t.fixations[i].onset_ms <= t.fixations[i - 1].onset_ms)
        throw Error(ErrorCode::NonMonotonicOnsets, t.subject + "/" + t.trial,
                    "trial " + t.subject + "/" + t.trial + " has repeated onset " +
                        std::to_string(t.fixations[i].onset_ms));
    out.push_back(std::move(t));
  }
  return out;
}

GazeFeatures gaze_features(const GazeTrial& trial) {
  GazeFeatures f;
  const auto& fx = trial.fixations;
  f.fixation_count = fx.size();
  if (fx.size() < 2) return f;

  struct Vec {
    double dx, dy;
  };
  std::vector<Vec> saccades;
  double horizontal = 0;
  for (std::size_t i = 0; i + 1 < fx.size(); ++i) {
    Vec v{fx[i + 1].x - fx[i].x, fx[i + 1].y - fx[i].y};
    f.scanpath_length += std::hypot(v.dx, v.dy);
    horizontal += std::abs(v.dx);
    saccades.push_back(v);
  }
  f.horizontal_amplitude = horizontal / static_cast<double>(saccades.size());
  if (saccades.size() < 2) return f;

  std::vector<Vec> moving;
  for (const auto& v : saccades)
    if (v.dx != 0 || v.dy != 0) moving.push_back(v);
  for (std::size_t i = 0; i + 1 < moving.size(); ++i) {
    const Vec a = moving[i], b = moving[i + 1];
    // atan2 stays well conditioned near 0 and pi, where acos of the dot does not.
    const double cross = a.dx * b.dy - a.dy * b.dx, dot = a.dx * b.dx + a.dy * b.dy;
    f.relative_angles.push_back(std::atan2(std::abs(cross), dot));
  }
  if (f.relative_angles.empty()) return f;
  double sum = 0;
  for (double a : f.relative_angles) sum += a;
  f.relative_angle_sum = sum;
  if (f.relative_angles.size() >= 2) {
    const double mean = sum / static_cast<double>(f.relative_angles.size());
    double var = 0;
    for (double a : f.relative_angles) var += (a - mean) * (a - mean);
    f.relative_angle_std = std::sqrt(var / static_cast<double>(f.relative_angles.size()));
  }
  return f;
}

std::optional<double> feature_value(const GazeFeatures& f, std::string_view name) {
  if (name == "fixation_count") return static_cast<double>(f.fixation_count);
  if (name == "scanpath_length") return f.scanpath_length;
  if (name == "horizontal_saccade_amplitude") return f.horizontal_amplitude;
  if (name == "relative_angle_sum") return f.relative_angle_sum;
  if (name == "relative_angle_std") return f.relative_angle_std;
  return std::nullopt;
}

std::vector<nlohmann::json> gaze_report(const std::vector<GazeTrial>& trials, const ReportOptions& opts) {
  std::vector<GazeFeatures> features;
  for (const auto& t : trials) features.push_back(gaze_features(t));

  std::vector<nlohmann::json> out;
  for (const char* name : kFeatureNames) {
    std::vector<double> values, scored_values, scores;
    std::vector<int> groups;
    for (std::size_t i = 0; i < trials.size(); ++i) {
      auto v = feature_value(features[i], name);
      if (!v) continue;
      if (trials[i].recalled) {
        values.push_back(*v);
        groups.push_back(*trials[i].recalled ? 1 : 0);
      }
      if (trials[i].score) {
        scored_values.push_back(*v);
        scores.push_back(*trials[i].score);
      }
    }
    nlohmann::json anova = {{"feature", name}, {"test", "anova"}, {"n", values.size()},
                            {"M", opts.permutations}, {"seed", opts.seed}};
    try {
      auto r = stats::permutation_anova(values, groups, opts.permutations, opts.seed);
      anova["statistic"] = std::isinf(r.statistic) ? nlohmann::json("inf") : nlohmann::json(r.statistic);
      anova["p"] = r.p_value;
      if (r.zero_variance) anova["zero_variance"] = true;
    } catch (const Error& e) {
      anova["error"] = std::string(to_string(e.code()));
    }
    out.push_back(anova);

    if (scores.empty()) continue;
    nlohmann::json corr = {{"feature", name}, {"test", "rank_correlation"}, {"n", scores.size()},
                           {"M", opts.permutations}, {"seed", opts.seed}};
    try {
      auto r = stats::correlation_test(scored_values, scores, stats::CorrelationMethod::Rank,
                                       opts.permutations, opts.seed);
      corr["statistic"] = r.statistic;
      corr["p"] = r.p_value;
    } catch (const Error& e) {
      corr["error"] = std::string(to_string(e.code()));
    }
    out.push_back(corr);
  }
  return out;
}

}  // namespace metal::gaze
