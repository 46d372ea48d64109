#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "thermadapt/building.hpp"
#include "thermadapt/calendar.hpp"

namespace thermadapt {

enum class DriftKind { occ, retro, end };

std::string_view drift_kind_name(DriftKind kind);
DriftKind parse_drift_kind(std::string_view name);

struct DriftEvent {
  DriftKind kind;
  Minutes time;

  friend bool operator==(const DriftEvent&, const DriftEvent&) = default;
};

/// Ordered drift events of one target building. Times are non-decreasing; the
/// only events sharing a timestamp are an occupancy change merged into a
/// retrofit (retro listed first). Exactly one `end` event, last.
struct DriftSchedule {
  std::vector<DriftEvent> events;

  Minutes end_time() const;
  int retrofit_count() const;
  int occupancy_change_count() const;
  /// Throws ContractError when an invariant is violated.
  void validate() const;

  friend bool operator==(const DriftSchedule&, const DriftSchedule&) = default;
};

inline constexpr double kRetrofitProbability = 0.70;
inline constexpr std::array<double, 4> kOccupancyChangeWeights{0.25, 0.35, 0.30, 0.10};
/// Calendar spacing used for the one-month rules (minimum occupancy spacing, merge window).
inline constexpr Minutes kOneMonth = 30 * 24 * 60;

/// Random schedule over `years` starting at `start`: one retrofit with
/// probability 0.7, 0..3 occupancy changes with weights (0.25, 0.35, 0.30,
/// 0.10), dates uniform over the span at day resolution. Occupancy changes are
/// at least one month apart; one within a month of the retrofit is applied
/// together with it.
DriftSchedule generate_drift_schedule(std::uint64_t seed, int years = 7, Minutes start = default_series_start());

/// Schedule with only the end event.
DriftSchedule no_drift_schedule(Minutes start, int years);
/// Single event on 1 April of the third year.
DriftSchedule fixed_event_schedule(DriftKind kind, Minutes start, int years);

void write_schedule_json(const std::filesystem::path& path, const DriftSchedule& schedule);
DriftSchedule read_schedule_json(const std::filesystem::path& path);

/// Output of the segment-by-segment target simulation.
struct TargetSeries {
  TimeSeries series;
  BuildingParams final_params;
  OccupancyProfile final_occupancy;
  /// Per segment: first timestamp and whether it begins after a retrofit / occupancy change.
  std::vector<Minutes> segment_starts;
};

/// Simulates the schedule segment by segment: an `occ` event draws a new
/// occupancy profile, a `retro` event retrofits the envelope. Thermal state
/// carries across segments. `params.q_nominal` is (re-)sized per segment.
TargetSeries generate_target_timeseries(const BuildingParams& params, const OccupancyProfile& occupancy,
                                        const WeatherSeries& weather, const DriftSchedule& schedule,
                                        std::uint64_t seed);

}  // namespace thermadapt
