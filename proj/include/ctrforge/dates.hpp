#pragma once

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

namespace ctrforge {

// Calendar date stored as days since 1970-01-01. All timestamps are UTC;
// no timezone handling anywhere.
struct Date {
  int32_t days = 0;

  friend bool operator==(Date a, Date b) { return a.days == b.days; }
  friend bool operator!=(Date a, Date b) { return a.days != b.days; }
  friend bool operator<(Date a, Date b) { return a.days < b.days; }
  friend bool operator<=(Date a, Date b) { return a.days <= b.days; }
  friend bool operator>(Date a, Date b) { return a.days > b.days; }
  friend bool operator>=(Date a, Date b) { return a.days >= b.days; }
  Date operator+(int32_t n) const { return Date{days + n}; }
  Date operator-(int32_t n) const { return Date{days - n}; }
};

// Howard Hinnant's civil calendar algorithms.
inline int32_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int>(doe) - 719468;
}

inline void civil_from_days(int32_t z, int& y, int& m, int& d) {
  z += 719468;
  const int era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<int>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y += m <= 2;
}

inline Date make_date(int y, int m, int d) { return Date{days_from_civil(y, m, d)}; }

// 0 = Monday .. 6 = Sunday. 1970-01-01 was a Thursday.
inline int day_of_week(Date d) {
  int32_t r = (d.days + 3) % 7;
  return r < 0 ? r + 7 : r;
}

inline int month_of(Date d) {
  int y, m, dd;
  civil_from_days(d.days, y, m, dd);
  return m;
}

inline std::string format_date(Date d) {
  int y, m, dd;
  civil_from_days(d.days, y, m, dd);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, dd);
  return buf;
}

inline std::optional<Date> parse_date(const std::string& s) {
  int y, m, d;
  char extra;
  if (std::sscanf(s.c_str(), "%4d-%2d-%2d%c", &y, &m, &d, &extra) != 3) return std::nullopt;
  if (m < 1 || m > 12 || d < 1 || d > 31) return std::nullopt;
  Date date = make_date(y, m, d);
  int y2, m2, d2;
  civil_from_days(date.days, y2, m2, d2);
  if (y2 != y || m2 != m || d2 != d) return std::nullopt;
  return date;
}

// UTC instant as unix seconds.
struct Timestamp {
  int64_t secs = 0;

  Date date() const {
    int64_t d = secs >= 0 ? secs / 86400 : (secs - 86399) / 86400;
    return Date{static_cast<int32_t>(d)};
  }
  friend bool operator==(Timestamp a, Timestamp b) { return a.secs == b.secs; }
  friend bool operator<(Timestamp a, Timestamp b) { return a.secs < b.secs; }
};

// Accepts "YYYY-MM-DDTHH:MM:SS[Z]", "YYYY-MM-DD HH:MM:SS" and bare dates.
inline std::optional<Timestamp> parse_timestamp(const std::string& s) {
  int y, m, d, hh = 0, mm = 0, ss = 0;
  char sep;
  int n = std::sscanf(s.c_str(), "%4d-%2d-%2d%c%2d:%2d:%2d", &y, &m, &d, &sep, &hh, &mm, &ss);
  if (n != 3 && n != 7) return std::nullopt;
  if (n == 7 && sep != 'T' && sep != ' ') return std::nullopt;
  if (n == 3) {
    auto date = parse_date(s);
    if (!date) return std::nullopt;
    return Timestamp{static_cast<int64_t>(date->days) * 86400};
  }
  if (m < 1 || m > 12 || d < 1 || d > 31) return std::nullopt;
  if (hh < 0 || hh > 23 || mm < 0 || mm > 59 || ss < 0 || ss > 60) return std::nullopt;
  Date date = make_date(y, m, d);
  int y2, m2, d2;
  civil_from_days(date.days, y2, m2, d2);
  if (y2 != y || m2 != m || d2 != d) return std::nullopt;
  return Timestamp{static_cast<int64_t>(date.days) * 86400 + hh * 3600 + mm * 60 + ss};
}

// Throwing variants for inputs that are required to be well-formed
// (configuration values, CLI flags). Log ingestion uses the optional forms
// so malformed rows can be counted instead of aborting.
Date require_date(const std::string& s);
Timestamp require_timestamp(const std::string& s);

inline std::string format_timestamp(Timestamp t) {
  Date d = t.date();
  int64_t rem = t.secs - static_cast<int64_t>(d.days) * 86400;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%sT%02d:%02d:%02dZ", format_date(d).c_str(),
                static_cast<int>(rem / 3600), static_cast<int>((rem / 60) % 60),
                static_cast<int>(rem % 60));
  return buf;
}

}  // namespace ctrforge
