#include "metal/time.hpp"

#include <charconv>
#include <cstdio>

namespace metal {

namespace {

using namespace std::chrono;

bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  for (std::size_t i = pos; i < pos + len; ++i)
    if (s[i] < '0' || s[i] > '9') return false;
  auto [p, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, out);
  return ec == std::errc{};
}

}  // namespace

bool is_valid(const CivilDate& d) {
  if (d.year_only) return d.year >= 1 && d.year <= 9999;
  return year_month_day{year{d.year}, month{d.month}, day{d.day}}.ok();
}

std::optional<CivilDate> parse_date(std::string_view text) {
  CivilDate d;
  int y = 0, m = 0, dd = 0;
  if (text.size() == 4) {
    if (!read_int(text, 0, 4, y)) return std::nullopt;
    d = CivilDate{y, 1, 1, true};
  } else if (text.size() == 10 && text[4] == '-' && text[7] == '-') {
    if (!read_int(text, 0, 4, y) || !read_int(text, 5, 2, m) || !read_int(text, 8, 2, dd))
      return std::nullopt;
    d = CivilDate{y, static_cast<unsigned>(m), static_cast<unsigned>(dd), false};
  } else {
    return std::nullopt;
  }
  if (!is_valid(d)) return std::nullopt;
  return d;
}

std::string format_date(const CivilDate& d) {
  char buf[16];
  if (d.year_only)
    std::snprintf(buf, sizeof buf, "%04d", d.year);
  else
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", d.year, d.month, d.day);
  return buf;
}

Instant start_of_day(const CivilDate& d) {
  sys_days days{year_month_day{year{d.year}, month{d.month}, day{d.day}}};
  return time_point_cast<Millis>(days);
}

CivilDate date_of(Instant t) {
  year_month_day ymd{floor<days>(t)};
  return CivilDate{static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                   static_cast<unsigned>(ymd.day()), false};
}

int age_in_years(const CivilDate& birth, const CivilDate& reference) {
  unsigned bm = birth.year_only ? 7 : birth.month;
  unsigned bd = birth.year_only ? 1 : birth.day;
  int age = reference.year - birth.year;
  if (reference.month < bm || (reference.month == bm && reference.day < bd)) --age;
  return age;
}

std::optional<Instant> parse_instant(std::string_view s) {
  // YYYY-MM-DDThh:mm:ss[.fff...](Z|+hh:mm|-hh:mm)
  int y, mo, d, h, mi, sec;
  if (s.size() < 20 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != 't') ||
      s[13] != ':' || s[16] != ':')
    return std::nullopt;
  if (!read_int(s, 0, 4, y) || !read_int(s, 5, 2, mo) || !read_int(s, 8, 2, d) ||
      !read_int(s, 11, 2, h) || !read_int(s, 14, 2, mi) || !read_int(s, 17, 2, sec))
    return std::nullopt;
  if (h > 23 || mi > 59 || sec > 60) return std::nullopt;
  std::size_t pos = 19;
  long long millis = 0;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    std::size_t digits = 0;
    long long scale = 100;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
      millis += (s[pos] - '0') * scale;
      scale /= 10;
      ++pos;
      ++digits;
    }
    if (digits == 0) return std::nullopt;
  }
  if (pos >= s.size()) return std::nullopt;
  int offset_minutes = 0;
  if (s[pos] == 'Z' || s[pos] == 'z') {
    ++pos;
  } else if (s[pos] == '+' || s[pos] == '-') {
    int oh, om;
    if (pos + 6 != s.size() || s[pos + 3] != ':' || !read_int(s, pos + 1, 2, oh) ||
        !read_int(s, pos + 4, 2, om) || oh > 23 || om > 59)
      return std::nullopt;
    offset_minutes = (oh * 60 + om) * (s[pos] == '-' ? -1 : 1);
    pos += 6;
  } else {
    return std::nullopt;
  }
  if (pos != s.size()) return std::nullopt;
  year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  Instant t = time_point_cast<Millis>(sys_days{ymd}) + hours{h} + minutes{mi} + seconds{sec} +
              Millis{millis} - minutes{offset_minutes};
  return t;
}

std::string format_instant(Instant t) {
  auto day = floor<days>(t);
  year_month_day ymd{day};
  auto rest = t - day;
  auto ms = static_cast<long long>(rest.count());
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lld.%03lldZ",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()), ms / 3'600'000LL, ms / 60'000LL % 60,
                ms / 1000LL % 60, ms % 1000LL);
  return buf;
}

std::optional<Millis> parse_duration(std::string_view text) {
  if (text.empty()) return std::nullopt;
  char unit = text.back();
  std::string_view digits = text;
  long long factor = 60'000;
  switch (unit) {
    case 's': factor = 1000; digits.remove_suffix(1); break;
    case 'm': factor = 60'000; digits.remove_suffix(1); break;
    case 'h': factor = 3'600'000; digits.remove_suffix(1); break;
    case 'd': factor = 86'400'000; digits.remove_suffix(1); break;
    default: break;
  }
  long long n = 0;
  auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
  if (ec != std::errc{} || p != digits.data() + digits.size() || n < 0) return std::nullopt;
  return Millis{n * factor};
}

}  // namespace metal
