#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "thermadapt/calendar.hpp"

namespace thermadapt {

/// Outdoor conditions on a uniform 15-minute grid.
struct WeatherSeries {
  std::vector<Minutes> time;
  std::vector<double> t_out;  // °C
  std::vector<double> q_dir;  // W/m²
  std::vector<double> q_dif;  // W/m²

  std::size_t size() const { return time.size(); }
  /// Row index of timestamp `t`; throws DataError when not covered.
  std::size_t index_of(Minutes t) const;
  void validate() const;
};

/// Recorded building operation on a uniform 15-minute grid.
struct TimeSeries {
  std::vector<Minutes> time;
  std::vector<double> t_in;   // °C
  std::vector<double> t_out;  // °C
  std::vector<double> q_dir;  // W/m²
  std::vector<double> q_dif;  // W/m²
  std::vector<double> u_in;   // heat source control signal in [0, 1]

  std::size_t size() const { return time.size(); }
  bool empty() const { return time.empty(); }
  void reserve(std::size_t n);
  void append(const TimeSeries& other);
  /// Rows with `begin <= time < end`.
  TimeSeries slice(Minutes begin, Minutes end) const;

  /// Checks spacing, physical bounds and control range; throws DataError.
  void validate() const;
};

/// `timestamp,t_in,t_out,q_dir,q_dif,u_in`. Lines starting with `#` are
/// comments; `comment`, when non-empty, is written as the first such line.
void write_timeseries_csv(const std::filesystem::path& path, const TimeSeries& series, const std::string& comment = {});
TimeSeries read_timeseries_csv(const std::filesystem::path& path);

/// `timestamp,t_out,q_dir,q_dif`
void write_weather_csv(const std::filesystem::path& path, const WeatherSeries& weather, const std::string& comment = {});
WeatherSeries read_weather_csv(const std::filesystem::path& path);

}  // namespace thermadapt
