#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "thermadapt/calendar.hpp"
#include "thermadapt/timeseries.hpp"

namespace thermadapt {

enum class WeatherId { munich, amsterdam, bratislava };

std::string_view weather_name(WeatherId id);
WeatherId parse_weather(std::string_view name);

/// Climate constants of the synthetic generator.
struct Climate {
  double annual_mean;       // °C
  double annual_amplitude;  // °C
  double diurnal_amplitude; // °C
  double latitude_deg;
};

Climate climate_of(WeatherId id);

/// Synthetic weather: annual + diurnal temperature sinusoids with AR(1)
/// anomalies, and clear-sky irradiance modulated by an AR(1) cloud process.
/// Deterministic in (id, years, seed, start).
WeatherSeries synth_weather(WeatherId id, int years, std::uint64_t seed, Minutes start = default_series_start());

/// Sine of the solar elevation angle at `t` (local solar time = clock time).
double solar_elevation_sine(double latitude_deg, Minutes t);

}  // namespace thermadapt
