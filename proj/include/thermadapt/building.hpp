#pragma once

#include <array>

#include "thermadapt/calendar.hpp"
#include "thermadapt/occupancy.hpp"
#include "thermadapt/timeseries.hpp"
#include "thermadapt/weather.hpp"

namespace thermadapt {

inline constexpr std::array<double, 4> kWallUValues{0.25, 0.55, 0.85, 1.15};  // W/(m²K)
inline constexpr std::array<double, 3> kWallCapacities{40.0, 150.0, 280.0};   // kJ/(m²K)
inline constexpr std::array<double, 2> kWindowRatios{0.16, 0.19};
inline constexpr std::array<double, 2> kGroundAreas{70.0, 100.0};  // m²

inline constexpr double kRetrofitWallU = 0.11;
inline constexpr double kRetrofitWindowU = 0.7;

/// Envelope parameters of one single-family house.
struct BuildingParams {
  double u_wall = 0.55;    // W/(m²K)
  double c_wall = 150.0;   // kJ/(m²K)
  double f_win = 0.16;     // window-to-wall ratio
  double a_ground = 100.0; // m² per floor
  WeatherId weather = WeatherId::munich;
  double u_win = 1.55;     // W/(m²K)
  double u_roof = 0.55;    // W/(m²K)
  double q_nominal = 0.0;  // W, 0 until sized
  bool retrofitted = false;

  friend bool operator==(const BuildingParams&, const BuildingParams&) = default;
};

/// Pre-retrofit building from the parameter grid; u_win = 1 + u_wall, u_roof = u_wall.
BuildingParams make_building(double u_wall, double c_wall, double f_win, double a_ground, WeatherId weather);

/// Geometry derived from the footprint: two floors of 2.6 m, square plan.
struct Geometry {
  double floor_height;
  double side;
  double wall_gross;
  double window;
  double wall_opaque;
  double roof;
  double volume;
};

Geometry geometry_of(const BuildingParams& p);

/// Fixed physical constants of the RC substitute model.
struct ThermalConstants {
  static constexpr double kFloors = 2.0;
  static constexpr double kFloorHeight = 2.6;     // m
  static constexpr double kAirHeatCapacity = 1206.0;  // J/(m³K), rho * c_p
  static constexpr double kInternalMassFactor = 5.0;  // furniture and partitions on the air node
  static constexpr double kInnerSurfaceCoefficient = 7.7;  // W/(m²K)
  static constexpr double kBaseAch = 0.4;       // 1/h
  static constexpr double kWindowOpenAch = 4.0;  // 1/h
  static constexpr double kSolarG = 0.6;
  static constexpr double kSolarAperture = 0.25;  // orientation and shading share of irradiance on the glazing
  static constexpr double kDesignTemperature = -12.0;  // °C
  static constexpr double kControllerBand = 0.3;  // K error at full power
  static constexpr int kSubstepsPerStep = 15;     // 1-minute Euler substeps
};

/// Total envelope transmission U·A over walls, windows and roof (W/K).
double transmission_ua(const BuildingParams& p);
/// Ventilation heat transfer coefficient at the given air change rate (W/K).
double ventilation_h(const BuildingParams& p, double ach);

/// Nominal heating power: (U·A + ventilation) × (t_sp_day − t_design).
/// Throws ConfigError when the result is not positive.
double size_heat_source(const BuildingParams& p, const OccupancyProfile& occupancy);

/// Envelope upgrade: walls and roof to 0.11, windows to 0.7 W/(m²K); heat source re-sized.
/// Throws ContractError when already retrofitted.
BuildingParams apply_retrofit(const BuildingParams& p, const OccupancyProfile& occupancy);

struct ThermalState {
  double t_air = 20.0;
  double t_wall = 18.0;

  friend bool operator==(const ThermalState&, const ThermalState&) = default;
};

struct SimulationOptions {
  bool heating = true;
  bool internal_gains = true;
  bool solar_gains = true;
  bool windows = true;
};

struct SimulationResult {
  TimeSeries series;
  ThermalState final_state;
  double heating_energy_kwh = 0.0;
};

/// Integrates the two-node RC model (air, wall) with 1-minute Euler substeps
/// from `t_start` (inclusive) to `t_end` (exclusive), recording every 15 min.
/// Each row holds the air temperature at the row time and the mean control
/// signal applied over the following 15 minutes. Throws NumericError when
/// |t_air| exceeds 100 °C.
SimulationResult simulate(const BuildingParams& params, const OccupancyProfile& occupancy,
                          const WeatherSeries& weather, Minutes t_start, Minutes t_end,
                          const ThermalState& initial_state, const SimulationOptions& options = {});

/// Thermal state after a 14-day spin-up from the first weather days.
ThermalState spin_up_state(const BuildingParams& params, const OccupancyProfile& occupancy,
                           const WeatherSeries& weather, Minutes t_start);

}  // namespace thermadapt
