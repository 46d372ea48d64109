#include "thermadapt/timeseries.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "thermadapt/errors.hpp"

namespace thermadapt {

namespace {

void check_spacing(const std::vector<Minutes>& time, const char* what) {
  for (std::size_t i = 1; i < time.size(); ++i)
    if (time[i] - time[i - 1] != kStepMinutes)
      throw DataError(std::string(what) + ": non-uniform spacing at row " + std::to_string(i) + " (" +
                      to_iso(time[i - 1]) + " -> " + to_iso(time[i]) + ")");
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    out.push_back(cell);
  }
  return out;
}

double parse_number(const std::string& cell, const std::filesystem::path& path, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw IoError(path.string() + ":" + std::to_string(line_no) + ": not a number '" + cell + "'");
  }
}

/// Reads a CSV with the given exact header; returns rows of raw cells.
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path, const std::string& header) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  bool seen_header = false;
  const std::size_t columns = split_csv_line(header).size();
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!seen_header) {
      if (line != header)
        throw IoError(path.string() + ": expected header '" + header + "', found '" + line + "'");
      seen_header = true;
      continue;
    }
    auto cells = split_csv_line(line);
    if (cells.size() != columns)
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(columns) +
                    " columns, found " + std::to_string(cells.size()));
    rows.push_back(std::move(cells));
  }
  if (!seen_header) throw IoError(path.string() + ": missing header '" + header + "'");
  return rows;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

constexpr const char* kSeriesHeader = "timestamp,t_in,t_out,q_dir,q_dif,u_in";
constexpr const char* kWeatherHeader = "timestamp,t_out,q_dir,q_dif";

}  // namespace

std::size_t WeatherSeries::index_of(Minutes t) const {
  if (time.empty() || t < time.front() || t > time.back() || (t - time.front()) % kStepMinutes != 0)
    throw DataError("weather does not cover " + to_iso(t));
  return static_cast<std::size_t>((t - time.front()) / kStepMinutes);
}

void WeatherSeries::validate() const {
  const std::size_t n = time.size();
  if (t_out.size() != n || q_dir.size() != n || q_dif.size() != n)
    throw DataError("weather: column lengths differ");
  check_spacing(time, "weather");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(t_out[i]) || !(q_dir[i] >= 0.0) || !(q_dif[i] >= 0.0))
      throw DataError("weather: invalid values at " + to_iso(time[i]));
  }
}

void TimeSeries::reserve(std::size_t n) {
  time.reserve(n);
  t_in.reserve(n);
  t_out.reserve(n);
  q_dir.reserve(n);
  q_dif.reserve(n);
  u_in.reserve(n);
}

void TimeSeries::append(const TimeSeries& other) {
  time.insert(time.end(), other.time.begin(), other.time.end());
  t_in.insert(t_in.end(), other.t_in.begin(), other.t_in.end());
  t_out.insert(t_out.end(), other.t_out.begin(), other.t_out.end());
  q_dir.insert(q_dir.end(), other.q_dir.begin(), other.q_dir.end());
  q_dif.insert(q_dif.end(), other.q_dif.begin(), other.q_dif.end());
  u_in.insert(u_in.end(), other.u_in.begin(), other.u_in.end());
}

TimeSeries TimeSeries::slice(Minutes begin, Minutes end) const {
  const auto lo = static_cast<std::size_t>(std::lower_bound(time.begin(), time.end(), begin) - time.begin());
  const auto hi = static_cast<std::size_t>(std::lower_bound(time.begin(), time.end(), end) - time.begin());
  TimeSeries out;
  if (hi <= lo) return out;
  auto take = [&](const std::vector<double>& v) { return std::vector<double>(v.begin() + lo, v.begin() + hi); };
  out.time.assign(time.begin() + lo, time.begin() + hi);
  out.t_in = take(t_in);
  out.t_out = take(t_out);
  out.q_dir = take(q_dir);
  out.q_dif = take(q_dif);
  out.u_in = take(u_in);
  return out;
}

void TimeSeries::validate() const {
  const std::size_t n = time.size();
  if (t_in.size() != n || t_out.size() != n || q_dir.size() != n || q_dif.size() != n || u_in.size() != n)
    throw DataError("timeseries: column lengths differ");
  check_spacing(time, "timeseries");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(t_in[i]) || t_in[i] < -10.0 || t_in[i] > 50.0)
      throw DataError("timeseries: t_in " + std::to_string(t_in[i]) + " outside [-10, 50] at " + to_iso(time[i]));
    if (!(u_in[i] >= 0.0 && u_in[i] <= 1.0))
      throw DataError("timeseries: u_in " + std::to_string(u_in[i]) + " outside [0, 1] at " + to_iso(time[i]));
    if (!std::isfinite(t_out[i]) || !(q_dir[i] >= 0.0) || !(q_dif[i] >= 0.0))
      throw DataError("timeseries: invalid weather values at " + to_iso(time[i]));
  }
}

void write_timeseries_csv(const std::filesystem::path& path, const TimeSeries& series, const std::string& comment) {
  auto out = open_for_write(path);
  if (!comment.empty()) out << "# " << comment << '\n';
  out << kSeriesHeader << '\n';
  char buf[160];
  for (std::size_t i = 0; i < series.size(); ++i) {
    std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%.6f,%.6f,%.8f\n", series.t_in[i], series.t_out[i], series.q_dir[i],
                  series.q_dif[i], series.u_in[i]);
    out << to_iso(series.time[i]) << buf;
  }
  if (!out) throw IoError("failed writing " + path.string());
}

TimeSeries read_timeseries_csv(const std::filesystem::path& path) {
  const auto rows = read_csv(path, kSeriesHeader);
  TimeSeries s;
  s.reserve(rows.size());
  std::size_t line = 1;
  for (const auto& r : rows) {
    ++line;
    s.time.push_back(parse_iso(r[0]));
    s.t_in.push_back(parse_number(r[1], path, line));
    s.t_out.push_back(parse_number(r[2], path, line));
    s.q_dir.push_back(parse_number(r[3], path, line));
    s.q_dif.push_back(parse_number(r[4], path, line));
    s.u_in.push_back(parse_number(r[5], path, line));
  }
  s.validate();
  return s;
}

void write_weather_csv(const std::filesystem::path& path, const WeatherSeries& weather, const std::string& comment) {
  auto out = open_for_write(path);
  if (!comment.empty()) out << "# " << comment << '\n';
  out << kWeatherHeader << '\n';
  char buf[128];
  for (std::size_t i = 0; i < weather.size(); ++i) {
    std::snprintf(buf, sizeof buf, ",%.6f,%.6f,%.6f\n", weather.t_out[i], weather.q_dir[i], weather.q_dif[i]);
    out << to_iso(weather.time[i]) << buf;
  }
  if (!out) throw IoError("failed writing " + path.string());
}

WeatherSeries read_weather_csv(const std::filesystem::path& path) {
  const auto rows = read_csv(path, kWeatherHeader);
  WeatherSeries w;
  std::size_t line = 1;
  for (const auto& r : rows) {
    ++line;
    w.time.push_back(parse_iso(r[0]));
    w.t_out.push_back(parse_number(r[1], path, line));
    w.q_dir.push_back(parse_number(r[2], path, line));
    w.q_dif.push_back(parse_number(r[3], path, line));
  }
  w.validate();
  return w;
}

}  // namespace thermadapt
