#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "thermadapt/calendar.hpp"

namespace thermadapt {

enum class DayType { workday = 0, saturday = 1, sunday = 2 };

DayType day_type_of(Minutes t);

/// One occupancy regime: who lives in the building and how they operate it.
struct OccupancyProfile {
  int n_occupants = 1;
  double t_sp_day = 21.0;   // °C
  double dt_night = 0.0;    // °C night setback, 0 = constant setpoint
  int wake_slot = 24;       // first day-setpoint slot of the day
  int sleep_slot = 88;      // first night-setpoint slot of the day

  /// Internal gains in W per 15-minute slot, indexed [day type][slot of day].
  std::array<std::array<double, kStepsPerDay>, 3> internal_gains{};
  /// Window opened during the slot, indexed [day type][slot of day].
  std::array<std::array<bool, kStepsPerDay>, 3> window_open{};

  double setpoint(Minutes t) const;
  double gains(Minutes t) const;
  bool window(Minutes t) const;

  friend bool operator==(const OccupancyProfile&, const OccupancyProfile&) = default;
};

/// Draws a random occupancy profile: 1..5 occupants, day setpoint uniform on
/// [20, 24] °C, no night setback for 30 % of profiles and a setback uniform on
/// [0.5, 4] °C otherwise. Gains scale with the number of occupants and differ
/// by day type.
OccupancyProfile generate_occupancy(std::uint64_t seed);

/// Same as `generate_occupancy` but with a prescribed setpoint pair.
OccupancyProfile generate_occupancy(std::uint64_t seed, double t_sp_day, double dt_night);

}  // namespace thermadapt
