#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace metal {

using Millis = std::chrono::milliseconds;
using Instant = std::chrono::sys_time<Millis>;

/// Calendar date. `year_only` marks dates whose month/day were dropped
/// (pseudonymized exports keep the birth year only).
struct CivilDate {
  int year = 1970;
  unsigned month = 1;
  unsigned day = 1;
  bool year_only = false;

  friend bool operator==(const CivilDate&, const CivilDate&) = default;
  friend auto operator<=>(const CivilDate&, const CivilDate&) = default;
};

inline constexpr Millis kDay{86'400'000};

/// Parses ISO 8601 instants with an explicit offset (`Z` or `+hh:mm`).
std::optional<Instant> parse_instant(std::string_view text);
/// Formats as `YYYY-MM-DDThh:mm:ss.mmmZ`.
std::string format_instant(Instant t);

/// Accepts `YYYY-MM-DD` and bare `YYYY`.
std::optional<CivilDate> parse_date(std::string_view text);
std::string format_date(const CivilDate& d);

Instant start_of_day(const CivilDate& d);
CivilDate date_of(Instant t);
bool is_valid(const CivilDate& d);

/// Completed years between `birth` and `reference`. Year-only birth dates
/// are aged as if born on July 1.
int age_in_years(const CivilDate& birth, const CivilDate& reference);

/// Parses durations like `30m`, `1d`, `90s`, `2h`, or a bare number of
/// minutes.
std::optional<Millis> parse_duration(std::string_view text);

}  // namespace metal
