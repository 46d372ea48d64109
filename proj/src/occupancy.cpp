#include "thermadapt/occupancy.hpp"

#include <algorithm>
#include <vector>

#include "thermadapt/rng.hpp"

namespace thermadapt {

namespace {

constexpr double kAwakeGainPerPerson = 80.0;   // W
constexpr double kAsleepGainPerPerson = 60.0;  // W
constexpr double kBaseAppliances = 80.0;       // W, fridge and standby
constexpr double kActiveAppliancesPerPerson = 40.0;
constexpr double kCookingGain = 600.0;

int slot_of_day(Minutes t) {
  const double h = hour_of_day(t);
  return static_cast<int>(h * 4.0 + 1e-9);
}

struct DayPlan {
  int away_begin = -1;  // slots with nobody (or fewer people) at home
  int away_end = -1;
  double fraction_home_while_away = 0.0;
  std::vector<int> meals;
};

void fill_day(OccupancyProfile& p, DayType type, const DayPlan& plan, int airing_sessions, int airing_slots) {
  auto& gains = p.internal_gains[static_cast<int>(type)];
  auto& window = p.window_open[static_cast<int>(type)];
  const auto n = static_cast<double>(p.n_occupants);
  for (int s = 0; s < kStepsPerDay; ++s) {
    const bool asleep = s < p.wake_slot || s >= p.sleep_slot;
    const bool away = s >= plan.away_begin && s < plan.away_end;
    const double present = away ? n * plan.fraction_home_while_away : n;
    double g = kBaseAppliances;
    if (asleep) {
      g += present * kAsleepGainPerPerson;
    } else {
      g += present * (kAwakeGainPerPerson + kActiveAppliancesPerPerson);
    }
    gains[s] = g;
    window[s] = false;
  }
  for (int meal : plan.meals)
    for (int s = meal; s < std::min(meal + 2, kStepsPerDay); ++s) gains[s] += kCookingGain;

  auto air = [&](int first) {
    for (int s = first; s < std::min(first + airing_slots, kStepsPerDay); ++s) window[s] = true;
  };
  air(p.wake_slot + 1);
  if (airing_sessions >= 2) air(p.sleep_slot - 2);
  if (airing_sessions >= 3) {
    const int midday = 52;
    const bool home = !(midday >= plan.away_begin && midday < plan.away_end) || plan.fraction_home_while_away > 0.0;
    if (home) air(midday);
  }
}

OccupancyProfile draw_profile(Rng& rng, double t_sp_day, double dt_night) {
  OccupancyProfile p;
  p.n_occupants = std::uniform_int_distribution<int>(1, 5)(rng);
  p.t_sp_day = t_sp_day;
  p.dt_night = dt_night;
  p.wake_slot = std::uniform_int_distribution<int>(22, 30)(rng);
  p.sleep_slot = std::uniform_int_distribution<int>(86, 94)(rng);

  const int airing_sessions = std::uniform_int_distribution<int>(1, 3)(rng);
  const int airing_slots = std::uniform_int_distribution<int>(1, 2)(rng);

  DayPlan workday;
  workday.away_begin = std::uniform_int_distribution<int>(28, 36)(rng);
  workday.away_end = std::uniform_int_distribution<int>(64, 76)(rng);
  workday.fraction_home_while_away =
      (p.n_occupants >= 3 && std::bernoulli_distribution(0.5)(rng)) ? 1.0 / p.n_occupants : 0.0;
  workday.meals = {p.wake_slot + 1, workday.away_end + 4};

  DayPlan saturday;
  if (std::bernoulli_distribution(0.5)(rng)) {
    saturday.away_begin = 40;
    saturday.away_end = 56;
  }
  saturday.meals = {p.wake_slot + 2, 48, 72};

  DayPlan sunday;
  sunday.meals = {p.wake_slot + 2, 48, 72};

  fill_day(p, DayType::workday, workday, airing_sessions, airing_slots);
  fill_day(p, DayType::saturday, saturday, airing_sessions, airing_slots);
  fill_day(p, DayType::sunday, sunday, airing_sessions, airing_slots);
  return p;
}

}  // namespace

DayType day_type_of(Minutes t) {
  const int dow = day_of_week(t);
  if (dow == 5) return DayType::saturday;
  if (dow == 6) return DayType::sunday;
  return DayType::workday;
}

double OccupancyProfile::setpoint(Minutes t) const {
  const int s = slot_of_day(t);
  const bool night = s < wake_slot || s >= sleep_slot;
  return night ? t_sp_day - dt_night : t_sp_day;
}

double OccupancyProfile::gains(Minutes t) const {
  return internal_gains[static_cast<int>(day_type_of(t))][slot_of_day(t)];
}

bool OccupancyProfile::window(Minutes t) const {
  return window_open[static_cast<int>(day_type_of(t))][slot_of_day(t)];
}

OccupancyProfile generate_occupancy(std::uint64_t seed) {
  Rng rng(mix_seed(seed, {fnv1a("occupancy")}));
  const double t_sp_day = std::uniform_real_distribution<double>(20.0, 24.0)(rng);
  const bool setback = !std::bernoulli_distribution(0.3)(rng);
  const double dt_night = setback ? std::uniform_real_distribution<double>(0.5, 4.0)(rng) : 0.0;
  return draw_profile(rng, t_sp_day, dt_night);
}

OccupancyProfile generate_occupancy(std::uint64_t seed, double t_sp_day, double dt_night) {
  Rng rng(mix_seed(seed, {fnv1a("occupancy-fixed")}));
  return draw_profile(rng, t_sp_day, dt_night);
}

}  // namespace thermadapt
