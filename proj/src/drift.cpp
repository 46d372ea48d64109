#include "thermadapt/drift.hpp"

#include <algorithm>
#include <fstream>
#include <optional>
#include <json.hpp>

#include "thermadapt/errors.hpp"
#include "thermadapt/rng.hpp"

namespace thermadapt {

namespace {

constexpr Minutes kMinutesPerDay = 24 * 60;

}  // namespace

std::string_view drift_kind_name(DriftKind kind) {
  switch (kind) {
    case DriftKind::occ: return "occ";
    case DriftKind::retro: return "retro";
    case DriftKind::end: return "end";
  }
  return "unknown";
}

DriftKind parse_drift_kind(std::string_view name) {
  for (auto k : {DriftKind::occ, DriftKind::retro, DriftKind::end})
    if (drift_kind_name(k) == name) return k;
  throw IoError("unknown drift event kind '" + std::string(name) + "'");
}

Minutes DriftSchedule::end_time() const {
  if (events.empty() || events.back().kind != DriftKind::end) throw ContractError("schedule has no end event");
  return events.back().time;
}

int DriftSchedule::retrofit_count() const {
  return static_cast<int>(std::count_if(events.begin(), events.end(), [](auto& e) { return e.kind == DriftKind::retro; }));
}

int DriftSchedule::occupancy_change_count() const {
  return static_cast<int>(std::count_if(events.begin(), events.end(), [](auto& e) { return e.kind == DriftKind::occ; }));
}

void DriftSchedule::validate() const {
  if (events.empty() || events.back().kind != DriftKind::end)
    throw ContractError("schedule: last event must be 'end'");
  if (std::count_if(events.begin(), events.end(), [](auto& e) { return e.kind == DriftKind::end; }) != 1)
    throw ContractError("schedule: exactly one 'end' event required");
  if (retrofit_count() > 1) throw ContractError("schedule: at most one retrofit");
  if (occupancy_change_count() > 3) throw ContractError("schedule: at most three occupancy changes");

  for (std::size_t i = 1; i < events.size(); ++i) {
    const auto& a = events[i - 1];
    const auto& b = events[i];
    if (b.time < a.time) throw ContractError("schedule: event times must not decrease");
    if (b.time == a.time && !(a.kind == DriftKind::retro && b.kind == DriftKind::occ))
      throw ContractError("schedule: only a retrofit and an occupancy change may share a timestamp");
  }

  std::vector<Minutes> occ;
  std::optional<Minutes> retro;
  for (const auto& e : events) {
    if (e.kind == DriftKind::occ) occ.push_back(e.time);
    if (e.kind == DriftKind::retro) retro = e.time;
  }
  for (std::size_t i = 1; i < occ.size(); ++i)
    if (occ[i] - occ[i - 1] < kOneMonth) throw ContractError("schedule: occupancy changes closer than one month");
  if (retro)
    for (Minutes t : occ) {
      const Minutes gap = t > *retro ? t - *retro : *retro - t;
      if (gap != 0 && gap < kOneMonth)
        throw ContractError("schedule: occupancy change within a month of the retrofit was not merged");
    }
}

DriftSchedule generate_drift_schedule(std::uint64_t seed, int years, Minutes start) {
  if (years < 1) throw ContractError("generate_drift_schedule: years must be >= 1");
  Rng rng(mix_seed(seed, {fnv1a("drift-schedule")}));
  const Minutes end = add_months(start, 12 * years);
  const auto total_days = static_cast<int>((end - start) / kMinutesPerDay);

  const bool retrofit = std::bernoulli_distribution(kRetrofitProbability)(rng);
  const int n_occ = std::discrete_distribution<int>(kOccupancyChangeWeights.begin(), kOccupancyChangeWeights.end())(rng);
  std::uniform_int_distribution<int> day(1, total_days - 1);
  constexpr int kMonthDays = static_cast<int>(kOneMonth / kMinutesPerDay);

  int retro_day = -1;
  std::vector<int> occ_days(static_cast<std::size_t>(n_occ));
  for (;;) {
    if (retrofit) retro_day = day(rng);
    for (auto& d : occ_days) {
      d = day(rng);
      if (retrofit && std::abs(d - retro_day) < kMonthDays) d = retro_day;
    }
    std::sort(occ_days.begin(), occ_days.end());
    bool ok = true;
    for (std::size_t i = 1; i < occ_days.size(); ++i) ok = ok && occ_days[i] - occ_days[i - 1] >= kMonthDays;
    if (ok) break;
  }

  DriftSchedule s;
  if (retrofit) s.events.push_back({DriftKind::retro, start + retro_day * kMinutesPerDay});
  for (int d : occ_days) s.events.push_back({DriftKind::occ, start + d * kMinutesPerDay});
  std::stable_sort(s.events.begin(), s.events.end(), [](const DriftEvent& a, const DriftEvent& b) {
    if (a.time != b.time) return a.time < b.time;
    return a.kind == DriftKind::retro && b.kind != DriftKind::retro;
  });
  s.events.push_back({DriftKind::end, end});
  s.validate();
  return s;
}

DriftSchedule no_drift_schedule(Minutes start, int years) {
  return DriftSchedule{{{DriftKind::end, add_months(start, 12 * years)}}};
}

DriftSchedule fixed_event_schedule(DriftKind kind, Minutes start, int years) {
  if (kind == DriftKind::end) throw ContractError("fixed_event_schedule: event kind must be occ or retro");
  const CivilTime c = to_civil(start);
  const Minutes event = to_minutes({c.year + 2, 4, 1, 0, 0});
  const Minutes end = add_months(start, 12 * years);
  if (event <= start || event >= end)
    throw ConfigError("fixed_event_schedule: 1 April of the third year lies outside the simulated span");
  return DriftSchedule{{{kind, event}, {DriftKind::end, end}}};
}

void write_schedule_json(const std::filesystem::path& path, const DriftSchedule& schedule) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& e : schedule.events)
    j.push_back({{"kind", std::string(drift_kind_name(e.kind))}, {"time", to_iso(e.time)}});
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

DriftSchedule read_schedule_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
  if (!j.is_array()) throw IoError(path.string() + ": schedule must be a JSON array");
  DriftSchedule s;
  for (const auto& item : j) {
    if (!item.is_object() || item.size() != 2 || !item.contains("kind") || !item.contains("time"))
      throw IoError(path.string() + ": each event needs exactly 'kind' and 'time'");
    s.events.push_back({parse_drift_kind(item.at("kind").get<std::string>()), parse_iso(item.at("time").get<std::string>())});
  }
  s.validate();
  return s;
}

TargetSeries generate_target_timeseries(const BuildingParams& params, const OccupancyProfile& occupancy,
                                        const WeatherSeries& weather, const DriftSchedule& schedule,
                                        std::uint64_t seed) {
  schedule.validate();
  if (weather.size() == 0) throw DataError("generate_target_timeseries: empty weather");
  const Minutes start = weather.time.front();

  TargetSeries out;
  BuildingParams p = params;
  OccupancyProfile occ = occupancy;
  p.q_nominal = size_heat_source(p, occ);
  ThermalState state = spin_up_state(p, occ, weather, start);

  Minutes segment_start = start;
  std::uint64_t occ_draws = 0;
  for (const auto& event : schedule.events) {
    if (event.time > segment_start) {
      auto snippet = simulate(p, occ, weather, segment_start, event.time, state);
      out.segment_starts.push_back(segment_start);
      out.series.append(snippet.series);
      state = snippet.final_state;
      segment_start = event.time;
    }
    if (event.kind == DriftKind::occ) {
      occ = generate_occupancy(mix_seed(seed, {fnv1a("occupancy-change"), ++occ_draws}));
      p.q_nominal = size_heat_source(p, occ);
    } else if (event.kind == DriftKind::retro) {
      p = apply_retrofit(p, occ);
    } else {
      break;
    }
  }
  out.final_params = p;
  out.final_occupancy = occ;
  return out;
}

}  // namespace thermadapt
