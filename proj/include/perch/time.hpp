// Copyright 2026 The Perch Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PERCH_TIME_HPP_
#define PERCH_TIME_HPP_

#include <chrono>
#include <cstdio>
#include <string>

#include "perch/types.hpp"

namespace perch {

struct CivilDate {
  int year = 1970;
  unsigned month = 1;  // 1..12
  unsigned day = 1;    // 1..31
};

inline CivilDate civil_from_unix(UnixSeconds ts) {
  using namespace std::chrono;
  // Round toward negative infinity so pre-epoch times land on the right day.
  int64_t days = ts / 86400;
  if (ts % 86400 < 0) --days;
  year_month_day ymd{sys_days{std::chrono::days{days}}};
  return {static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
          static_cast<unsigned>(ymd.day())};
}

inline UnixSeconds unix_from_civil(const CivilDate& d) {
  using namespace std::chrono;
  sys_days days = year_month_day{std::chrono::year{d.year},
                                 std::chrono::month{d.month},
                                 std::chrono::day{d.day}};
  return duration_cast<seconds>(days.time_since_epoch()).count();
}

enum class CalendarPeriod : uint8_t { day = 0, month = 1, quarter = 2 };

inline const char* to_string(CalendarPeriod p) {
  switch (p) {
    case CalendarPeriod::day: return "day";
    case CalendarPeriod::month: return "month";
    case CalendarPeriod::quarter: return "quarter";
  }
  return "?";
}

// First period boundary strictly after `ts` (midnight UTC; the 1st of the
// next month; the 1st of the next quarter month Jan/Apr/Jul/Oct).
inline UnixSeconds next_period_boundary(UnixSeconds ts, CalendarPeriod p) {
  CivilDate d = civil_from_unix(ts);
  switch (p) {
    case CalendarPeriod::day:
      return unix_from_civil(d) + 86400;
    case CalendarPeriod::month: {
      if (d.month == 12) return unix_from_civil({d.year + 1, 1, 1});
      return unix_from_civil({d.year, d.month + 1, 1});
    }
    case CalendarPeriod::quarter: {
      unsigned qm = ((d.month - 1) / 3) * 3 + 4;
      if (qm > 12) return unix_from_civil({d.year + 1, 1, 1});
      return unix_from_civil({d.year, qm, 1});
    }
  }
  return ts;
}

inline std::string day_label(UnixSeconds ts) {
  CivilDate d = civil_from_unix(ts);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", d.year, d.month, d.day);
  return buf;
}

inline std::string month_label(UnixSeconds ts) {
  CivilDate d = civil_from_unix(ts);
  char buf[12];
  std::snprintf(buf, sizeof(buf), "%04d-%02u", d.year, d.month);
  return buf;
}

inline std::string iso8601_utc(UnixSeconds ts) {
  CivilDate d = civil_from_unix(ts);
  int64_t rem = ts - unix_from_civil(d);
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ", d.year,
                d.month, d.day, static_cast<int>(rem / 3600),
                static_cast<int>((rem / 60) % 60), static_cast<int>(rem % 60));
  return buf;
}

// Accepts raw epoch seconds or a YYYY-MM-DD date (start of day UTC).
inline UnixSeconds parse_time(const std::string& text) {
  if (text.size() == 10 && text[4] == '-' && text[7] == '-') {
    CivilDate d;
    if (std::sscanf(text.c_str(), "%d-%u-%u", &d.year, &d.month, &d.day) == 3)
      return unix_from_civil(d);
  }
  size_t pos = 0;
  long long v = std::stoll(text, &pos);
  if (pos != text.size())
    throw Error(errc::kConfigError, "cannot parse time", text);
  return v;
}

}  // namespace perch

#endif  // PERCH_TIME_HPP_
