#include "thermadapt/weather.hpp"

#include <cmath>
#include <numbers>

#include "thermadapt/errors.hpp"
#include "thermadapt/rng.hpp"

namespace thermadapt {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSolarConstant = 1353.0;  // W/m²

// AR(1) coefficients per 15-minute step: ~2 day temperature anomalies, ~12 h cloud cover.
const double kTempPhi = std::exp(-0.25 / 48.0);
constexpr double kTempAnomalyStd = 2.5;
const double kCloudPhi = std::exp(-0.25 / 12.0);

}  // namespace

std::string_view weather_name(WeatherId id) {
  switch (id) {
    case WeatherId::munich: return "munich";
    case WeatherId::amsterdam: return "amsterdam";
    case WeatherId::bratislava: return "bratislava";
  }
  return "unknown";
}

WeatherId parse_weather(std::string_view name) {
  for (auto id : {WeatherId::munich, WeatherId::amsterdam, WeatherId::bratislava})
    if (weather_name(id) == name) return id;
  throw ConfigError("unknown weather location '" + std::string(name) + "' (valid: munich, amsterdam, bratislava)");
}

Climate climate_of(WeatherId id) {
  switch (id) {
    case WeatherId::munich: return {9.0, 10.0, 5.0, 48.1};
    case WeatherId::amsterdam: return {10.5, 7.0, 4.0, 52.4};
    case WeatherId::bratislava: return {10.5, 11.0, 5.0, 48.1};
  }
  throw ConfigError("unknown weather id");
}

double solar_elevation_sine(double latitude_deg, Minutes t) {
  const double doy = day_of_year(t);
  const double declination = 23.44 * kPi / 180.0 * std::sin(2.0 * kPi * (284.0 + doy) / 365.0);
  const double hour_angle = (hour_of_day(t) - 12.0) * 15.0 * kPi / 180.0;
  const double lat = latitude_deg * kPi / 180.0;
  return std::sin(lat) * std::sin(declination) + std::cos(lat) * std::cos(declination) * std::cos(hour_angle);
}

WeatherSeries synth_weather(WeatherId id, int years, std::uint64_t seed, Minutes start) {
  if (years < 1) throw ContractError("synth_weather: years must be >= 1");
  const Climate climate = climate_of(id);
  const Minutes end = add_months(start, 12 * years);
  const auto n = static_cast<std::size_t>((end - start) / kStepMinutes);

  Rng rng(mix_seed(seed, {fnv1a("weather"), static_cast<std::uint64_t>(id)}));
  std::normal_distribution<double> normal(0.0, 1.0);

  WeatherSeries w;
  w.time.reserve(n);
  w.t_out.reserve(n);
  w.q_dir.reserve(n);
  w.q_dif.reserve(n);

  double temp_anomaly = kTempAnomalyStd * normal(rng);
  double cloud = normal(rng);
  const double temp_innovation = kTempAnomalyStd * std::sqrt(1.0 - kTempPhi * kTempPhi);
  const double cloud_innovation = std::sqrt(1.0 - kCloudPhi * kCloudPhi);

  for (std::size_t i = 0; i < n; ++i) {
    const Minutes t = start + static_cast<Minutes>(i) * kStepMinutes;
    const double doy = day_of_year(t);
    const double hour = hour_of_day(t);

    temp_anomaly = kTempPhi * temp_anomaly + temp_innovation * normal(rng);
    cloud = kCloudPhi * cloud + cloud_innovation * normal(rng);

    // Coldest around 20 January, diurnal minimum at 03:00.
    const double annual = climate.annual_mean - climate.annual_amplitude * std::cos(2.0 * kPi * (doy - 20.0) / 365.25);
    const double diurnal = -climate.diurnal_amplitude * std::cos(2.0 * kPi * (hour - 3.0) / 24.0);
    // Overcast skies damp the daily swing.
    const double clear_index = 1.0 / (1.0 + std::exp(-1.5 * cloud));
    w.t_out.push_back(annual + (0.5 + 0.5 * clear_index) * diurnal + temp_anomaly);

    const double sin_elev = solar_elevation_sine(climate.latitude_deg, t);
    double q_dir = 0.0;
    double q_dif = 0.0;
    if (sin_elev > 0.0) {
      const double air_mass = std::min(1.0 / sin_elev, 38.0);
      const double dni_clear = kSolarConstant * std::pow(0.7, std::pow(air_mass, 0.678));
      const double direct_clear = dni_clear * sin_elev;
      const double diffuse_clear = 0.2 * direct_clear;
      q_dir = direct_clear * clear_index;
      q_dif = diffuse_clear + 0.35 * (1.0 - clear_index) * direct_clear;
    }
    w.time.push_back(t);
    w.q_dir.push_back(q_dir);
    w.q_dif.push_back(q_dif);
  }
  return w;
}

}  // namespace thermadapt
