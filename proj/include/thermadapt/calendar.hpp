#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace thermadapt {

/// Minutes since 1970-01-01T00:00 (naive local time, no DST).
using Minutes = std::int64_t;

inline constexpr Minutes kStepMinutes = 15;
inline constexpr int kStepsPerDay = 96;
inline constexpr int kSlotsPerWeek = 7 * kStepsPerDay;

struct CivilTime {
  int year = 1970;
  int month = 1;  // 1..12
  int day = 1;    // 1..31
  int hour = 0;
  int minute = 0;
};

Minutes to_minutes(const CivilTime& c);
CivilTime to_civil(Minutes t);

/// `YYYY-MM-DDTHH:MM:SS`
std::string to_iso(Minutes t);
/// Accepts `YYYY-MM-DD`, `YYYY-MM-DDTHH:MM` and `YYYY-MM-DDTHH:MM:SS` (also with a space separator).
Minutes parse_iso(std::string_view text);

/// Calendar month arithmetic on the date part; the time of day is preserved.
Minutes add_months(Minutes t, int months);

/// 0 = Monday .. 6 = Sunday.
int day_of_week(Minutes t);
/// 1-based day of year.
int day_of_year(Minutes t);
/// Fractional hour of day in [0, 24).
double hour_of_day(Minutes t);
/// 15-minute slot within the week, Monday 00:00 = 0.
int week_slot(Minutes t);

/// Default first timestamp of every simulated series.
Minutes default_series_start();

}  // namespace thermadapt
