#include "thermadapt/building.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "thermadapt/errors.hpp"

namespace thermadapt {

namespace {

using K = ThermalConstants;

bool in_grid(double u_wall) {
  return std::any_of(kWallUValues.begin(), kWallUValues.end(), [&](double v) { return v == u_wall; });
}

struct Conductances {
  double air_wall;   // air <-> wall node
  double wall_out;   // wall node <-> outdoor
  double direct;     // windows + roof, air <-> outdoor
  double vent_base;
  double vent_open;
  double c_air;      // J/K
  double c_wall;     // J/K
  double solar_area; // m², effective aperture for irradiance
};

Conductances conductances_of(const BuildingParams& p) {
  const Geometry g = geometry_of(p);
  Conductances c{};
  c.air_wall = K::kInnerSurfaceCoefficient * g.wall_opaque;
  const double wall_ua = p.u_wall * g.wall_opaque;
  // Wall node sits behind the inner surface resistance; the rest of the wall resistance faces outdoors.
  c.wall_out = 1.0 / (1.0 / wall_ua - 1.0 / c.air_wall);
  c.direct = p.u_win * g.window + p.u_roof * g.roof;
  c.vent_base = ventilation_h(p, K::kBaseAch);
  c.vent_open = ventilation_h(p, K::kWindowOpenAch);
  c.c_air = K::kAirHeatCapacity * g.volume * K::kInternalMassFactor;
  c.c_wall = p.c_wall * 1000.0 * g.wall_opaque;
  c.solar_area = K::kSolarG * K::kSolarAperture * g.window;
  return c;
}

}  // namespace

BuildingParams make_building(double u_wall, double c_wall, double f_win, double a_ground, WeatherId weather) {
  if (!in_grid(u_wall)) throw ConfigError("u_wall " + std::to_string(u_wall) + " is not in {0.25, 0.55, 0.85, 1.15}");
  if (!(c_wall > 0.0) || !(f_win > 0.0 && f_win < 1.0) || !(a_ground > 0.0))
    throw ConfigError("building parameters must be positive (f_win in (0, 1))");
  BuildingParams p;
  p.u_wall = u_wall;
  p.c_wall = c_wall;
  p.f_win = f_win;
  p.a_ground = a_ground;
  p.weather = weather;
  p.u_win = 1.0 + u_wall;
  p.u_roof = u_wall;
  return p;
}

Geometry geometry_of(const BuildingParams& p) {
  Geometry g{};
  g.floor_height = K::kFloorHeight;
  g.side = std::sqrt(p.a_ground);
  g.wall_gross = 4.0 * g.side * K::kFloors * K::kFloorHeight;
  g.window = p.f_win * g.wall_gross;
  g.wall_opaque = g.wall_gross - g.window;
  g.roof = p.a_ground;
  g.volume = K::kFloors * p.a_ground * K::kFloorHeight;
  return g;
}

double transmission_ua(const BuildingParams& p) {
  const Geometry g = geometry_of(p);
  return p.u_wall * g.wall_opaque + p.u_win * g.window + p.u_roof * g.roof;
}

double ventilation_h(const BuildingParams& p, double ach) {
  return K::kAirHeatCapacity * geometry_of(p).volume * ach / 3600.0;
}

double size_heat_source(const BuildingParams& p, const OccupancyProfile& occupancy) {
  const double q = (transmission_ua(p) + ventilation_h(p, K::kBaseAch)) *
                   (occupancy.t_sp_day - K::kDesignTemperature);
  if (!(q > 0.0)) throw ConfigError("heat source sizing gave non-positive power " + std::to_string(q) + " W");
  return q;
}

BuildingParams apply_retrofit(const BuildingParams& p, const OccupancyProfile& occupancy) {
  if (p.retrofitted) throw ContractError("apply_retrofit: building is already retrofitted");
  BuildingParams r = p;
  r.u_wall = kRetrofitWallU;
  r.u_roof = kRetrofitWallU;
  r.u_win = kRetrofitWindowU;
  r.retrofitted = true;
  r.q_nominal = size_heat_source(r, occupancy);
  return r;
}

SimulationResult simulate(const BuildingParams& params, const OccupancyProfile& occupancy,
                          const WeatherSeries& weather, Minutes t_start, Minutes t_end,
                          const ThermalState& initial_state, const SimulationOptions& options) {
  if (t_end < t_start || (t_end - t_start) % kStepMinutes != 0)
    throw ContractError("simulate: invalid interval " + to_iso(t_start) + " .. " + to_iso(t_end));
  const auto steps = static_cast<std::size_t>((t_end - t_start) / kStepMinutes);
  SimulationResult result;
  result.final_state = initial_state;
  if (steps == 0) return result;

  const std::size_t first = weather.index_of(t_start);
  if (first + steps > weather.size())
    throw DataError("simulate: weather ends at " + to_iso(weather.time.back()) + ", needed until " + to_iso(t_end));
  if (options.heating && !(params.q_nominal > 0.0))
    throw ConfigError("simulate: heat source not sized (q_nominal <= 0)");

  const Conductances c = conductances_of(params);
  const double kp = params.q_nominal / K::kControllerBand;
  constexpr double dt = 60.0 * static_cast<double>(kStepMinutes) / K::kSubstepsPerStep;

  TimeSeries& s = result.series;
  s.reserve(steps);
  double t_air = initial_state.t_air;
  double t_wall = initial_state.t_wall;
  double energy_j = 0.0;

  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t w = first + k;
    const Minutes t = weather.time[w];
    const double t_out = weather.t_out[w];
    const double solar = options.solar_gains ? c.solar_area * (weather.q_dir[w] + weather.q_dif[w]) : 0.0;
    const double gains = options.internal_gains ? occupancy.gains(t) : 0.0;
    const double vent = options.windows && occupancy.window(t) ? c.vent_open : c.vent_base;
    const double setpoint = occupancy.setpoint(t);
    const double h_out = c.direct + vent;

    s.time.push_back(t);
    s.t_in.push_back(t_air);
    s.t_out.push_back(t_out);
    s.q_dir.push_back(weather.q_dir[w]);
    s.q_dif.push_back(weather.q_dif[w]);

    double heat_sum = 0.0;
    for (int sub = 0; sub < K::kSubstepsPerStep; ++sub) {
      double heat = 0.0;
      if (options.heating) heat = std::clamp(kp * (setpoint - t_air), 0.0, params.q_nominal);
      heat_sum += heat;
      const double d_air =
          (h_out * (t_out - t_air) + c.air_wall * (t_wall - t_air) + heat + solar + gains) / c.c_air;
      const double d_wall = (c.air_wall * (t_air - t_wall) + c.wall_out * (t_out - t_wall)) / c.c_wall;
      t_air += dt * d_air;
      t_wall += dt * d_wall;
      if (!std::isfinite(t_air) || std::abs(t_air) > 100.0)
        throw NumericError("simulate: unstable integration at " + to_iso(t) + " substep " + std::to_string(sub) +
                           ", t_air=" + std::to_string(t_air) + " t_wall=" + std::to_string(t_wall));
    }
    const double mean_heat = heat_sum / K::kSubstepsPerStep;
    energy_j += mean_heat * 60.0 * static_cast<double>(kStepMinutes);
    s.u_in.push_back(options.heating ? std::clamp(mean_heat / params.q_nominal, 0.0, 1.0) : 0.0);
  }

  result.final_state = {t_air, t_wall};
  result.heating_energy_kwh = energy_j / 3.6e6;
  return result;
}

ThermalState spin_up_state(const BuildingParams& params, const OccupancyProfile& occupancy,
                           const WeatherSeries& weather, Minutes t_start) {
  const Minutes end = std::min(t_start + 14 * 24 * 60, weather.time.back() + kStepMinutes);
  const ThermalState guess{occupancy.t_sp_day, 0.5 * (occupancy.t_sp_day + weather.t_out[weather.index_of(t_start)])};
  return simulate(params, occupancy, weather, t_start, end, guess).final_state;
}

}  // namespace thermadapt
