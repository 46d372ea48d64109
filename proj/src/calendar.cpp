#include "thermadapt/calendar.hpp"

#include <chrono>
#include <cstdio>

#include "thermadapt/errors.hpp"

namespace thermadapt {

namespace {

using std::chrono::days;
using std::chrono::sys_days;
using std::chrono::year_month_day;

constexpr Minutes kMinutesPerDay = 24 * 60;

Minutes floor_div(Minutes a, Minutes b) {
  Minutes q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

Minutes to_minutes(const CivilTime& c) {
  const year_month_day ymd{std::chrono::year{c.year}, std::chrono::month{static_cast<unsigned>(c.month)},
                           std::chrono::day{static_cast<unsigned>(c.day)}};
  if (!ymd.ok()) throw ContractError("invalid calendar date " + std::to_string(c.year) + "-" +
                                     std::to_string(c.month) + "-" + std::to_string(c.day));
  const auto d = sys_days{ymd}.time_since_epoch().count();
  return static_cast<Minutes>(d) * kMinutesPerDay + c.hour * 60 + c.minute;
}

CivilTime to_civil(Minutes t) {
  const Minutes day_index = floor_div(t, kMinutesPerDay);
  const Minutes minute_of_day = t - day_index * kMinutesPerDay;
  const year_month_day ymd{sys_days{days{day_index}}};
  CivilTime c;
  c.year = static_cast<int>(ymd.year());
  c.month = static_cast<int>(static_cast<unsigned>(ymd.month()));
  c.day = static_cast<int>(static_cast<unsigned>(ymd.day()));
  c.hour = static_cast<int>(minute_of_day / 60);
  c.minute = static_cast<int>(minute_of_day % 60);
  return c;
}

std::string to_iso(Minutes t) {
  const CivilTime c = to_civil(t);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:00", c.year, c.month, c.day, c.hour, c.minute);
  return buf;
}

Minutes parse_iso(std::string_view text) {
  CivilTime c;
  int second = 0;
  const std::string s(text);
  char sep = 'T';
  const int n = std::sscanf(s.c_str(), "%d-%d-%d%c%d:%d:%d", &c.year, &c.month, &c.day, &sep, &c.hour, &c.minute,
                            &second);
  if (n != 3 && n != 6 && n != 7) throw IoError("malformed ISO-8601 timestamp '" + s + "'");
  if (n == 3) {
    c.hour = 0;
    c.minute = 0;
  } else if (sep != 'T' && sep != ' ') {
    throw IoError("malformed ISO-8601 timestamp '" + s + "'");
  }
  if (c.hour < 0 || c.hour > 23 || c.minute < 0 || c.minute > 59 || second != 0)
    throw IoError("unsupported time of day in '" + s + "'");
  return to_minutes(c);
}

Minutes add_months(Minutes t, int months) {
  const Minutes day_index = floor_div(t, kMinutesPerDay);
  const Minutes minute_of_day = t - day_index * kMinutesPerDay;
  year_month_day ymd{sys_days{days{day_index}}};
  ymd += std::chrono::months{months};
  if (!ymd.ok()) ymd = ymd.year() / ymd.month() / std::chrono::last;
  return static_cast<Minutes>(sys_days{ymd}.time_since_epoch().count()) * kMinutesPerDay + minute_of_day;
}

int day_of_week(Minutes t) {
  const std::chrono::weekday wd{sys_days{days{floor_div(t, kMinutesPerDay)}}};
  return static_cast<int>((wd.c_encoding() + 6) % 7);
}

int day_of_year(Minutes t) {
  const Minutes day_index = floor_div(t, kMinutesPerDay);
  const year_month_day ymd{sys_days{days{day_index}}};
  const sys_days jan1{ymd.year() / std::chrono::January / 1};
  return static_cast<int>(day_index - jan1.time_since_epoch().count()) + 1;
}

double hour_of_day(Minutes t) {
  const Minutes m = t - floor_div(t, kMinutesPerDay) * kMinutesPerDay;
  return static_cast<double>(m) / 60.0;
}

int week_slot(Minutes t) {
  const Minutes m = t - floor_div(t, kMinutesPerDay) * kMinutesPerDay;
  return day_of_week(t) * kStepsPerDay + static_cast<int>(m / kStepMinutes);
}

Minutes default_series_start() { return to_minutes({2015, 1, 1, 0, 0}); }

}  // namespace thermadapt
