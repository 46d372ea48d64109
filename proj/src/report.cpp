#include "thermadapt/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <tuple>

#include <boost/math/distributions/students_t.hpp>

#include "thermadapt/errors.hpp"
#include "thermadapt/metrics.hpp"

namespace thermadapt {

namespace {

struct Key {
  std::string strategy;
  int months;
  auto operator<=>(const Key&) const = default;
};

// per (strategy, |x|) -> building -> n -> (rmse, mase)
struct Cell {
  double rmse = 0.0;
  double mase = NAN;
};
using Grid = std::map<Key, std::map<std::string, std::map<int, Cell>>>;

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? NAN : s / static_cast<double>(v.size());
}

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::ofstream open_csv(const std::filesystem::path& path, const std::string& hash, const char* header) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  if (!hash.empty()) out << "# config_hash=" << hash << '\n';
  out << header << '\n';
  return out;
}

}  // namespace

IntervalStat t_interval(std::span<const double> values, double level) {
  IntervalStat s;
  s.n = static_cast<int>(values.size());
  if (s.n == 0) return {NAN, NAN, 0};
  for (double v : values) s.mean += v;
  s.mean /= s.n;
  if (s.n < 2) {
    s.half_width = NAN;
    return s;
  }
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  const double sd = std::sqrt(ss / (s.n - 1));
  boost::math::students_t dist(s.n - 1);
  s.half_width = boost::math::quantile(dist, 0.5 + level / 2.0) * sd / std::sqrt(static_cast<double>(s.n));
  return s;
}

int test_year(int update_n, int period_months) { return update_n * period_months / 12 + 1; }

std::string test_season(int update_n, int period_months, Minutes series_start) {
  const int month = to_civil(add_months(series_start, update_n * period_months)).month;
  if (month == 12 || month <= 2) return "winter";
  if (month <= 5) return "spring";
  if (month <= 8) return "summer";
  return "autumn";
}

Summary aggregate(std::span<const ResultRow> rows, Minutes series_start) {
  if (rows.empty()) throw DataError("aggregate: no result rows");
  Summary out;

  struct Acc {
    double rmse = 0.0, mase = 0.0;
    int n = 0, n_mase = 0;
  };
  std::map<std::tuple<Key, std::string, int>, Acc> acc;
  for (const auto& r : rows) {
    auto& a = acc[{Key{r.strategy, r.period_months}, r.building, r.update_n}];
    a.rmse += r.rmse;
    ++a.n;
    if (!std::isnan(r.mase)) {
      a.mase += r.mase;
      ++a.n_mase;
    }
  }
  Grid grid;
  std::set<int> replicate_counts;
  for (const auto& [k, a] : acc) {
    const auto& [key, building, n] = k;
    grid[key][building][n] = {a.rmse / a.n, a.n_mase ? a.mase / a.n_mase : NAN};
    replicate_counts.insert(a.n);
  }
  if (replicate_counts.size() > 1)
    out.warnings.push_back("partial aggregate: rows have unequal replicate counts");

  std::set<std::string> all_buildings;
  std::map<int, int> max_n;
  for (const auto& [key, per_b] : grid)
    for (const auto& [b, per_n] : per_b) {
      all_buildings.insert(b);
      max_n[key.months] = std::max(max_n[key.months], per_n.rbegin()->first);
    }
  for (const auto& [key, per_b] : grid) {
    for (const auto& b : all_buildings)
      if (!per_b.contains(b))
        out.warnings.push_back("partial aggregate: " + key.strategy + " |x|=" + std::to_string(key.months) +
                               " has no rows for " + b);
    for (const auto& [b, per_n] : per_b)
      if (static_cast<int>(per_n.size()) != max_n[key.months])
        out.warnings.push_back("partial aggregate: " + key.strategy + " |x|=" + std::to_string(key.months) + " " + b +
                               " has " + std::to_string(per_n.size()) + " of " +
                               std::to_string(max_n[key.months]) + " updates");
  }

  // per-building means over all updates, used by the period table and RRI
  std::map<Key, std::map<std::string, std::pair<double, double>>> building_means;
  for (const auto& [key, per_b] : grid)
    for (const auto& [b, per_n] : per_b) {
      std::vector<double> r, m;
      for (const auto& [n, cell] : per_n) {
        r.push_back(cell.rmse);
        if (!std::isnan(cell.mase)) m.push_back(cell.mase);
      }
      building_means[key][b] = {mean_of(r), mean_of(m)};
    }

  for (const auto& [key, per_b] : grid) {
    // yearly
    std::map<int, std::vector<double>> per_year;
    for (const auto& [b, per_n] : per_b) {
      std::map<int, std::vector<double>> by_year;
      for (const auto& [n, cell] : per_n) by_year[test_year(n, key.months)].push_back(cell.rmse);
      for (const auto& [y, v] : by_year) per_year[y].push_back(mean_of(v));
    }
    for (const auto& [y, v] : per_year) out.yearly.push_back({key.strategy, key.months, y, t_interval(v)});

    // period comparison
    PeriodRow p;
    p.strategy = key.strategy;
    p.period_months = key.months;
    std::vector<double> r, m, rr;
    const Key bench{"ift", key.months};
    const bool have_bench = building_means.contains(bench);
    for (const auto& [b, means] : building_means[key]) {
      r.push_back(means.first);
      if (!std::isnan(means.second)) m.push_back(means.second);
      if (have_bench && building_means[bench].contains(b))
        rr.push_back(rri(building_means[bench][b].first, means.first));
    }
    p.rmse = t_interval(r);
    p.mase = t_interval(m);
    if (have_bench) {
      std::vector<double> br;
      for (const auto& [b, means] : building_means[bench]) br.push_back(means.first);
      p.rri = rri(mean_of(br), p.rmse.mean);
      p.rri_buildings = t_interval(rr);
    } else {
      p.rri = NAN;
      p.rri_buildings = {NAN, NAN, 0};
    }
    out.periods.push_back(p);

    // seasonal curve and season means
    std::map<int, std::vector<double>> per_step;
    for (const auto& [b, per_n] : per_b)
      for (const auto& [n, cell] : per_n) per_step[n].push_back(cell.rmse);
    for (const auto& [n, v] : per_step)
      out.seasonal.push_back({key.strategy, key.months, n, add_months(series_start, n * key.months),
                              test_season(n, key.months, series_start), t_interval(v)});
    std::map<std::string, std::vector<double>> per_season;
    for (const auto& [b, per_n] : per_b) {
      std::map<std::string, std::vector<double>> by_season;
      for (const auto& [n, cell] : per_n) by_season[test_season(n, key.months, series_start)].push_back(cell.rmse);
      for (const auto& [s, v] : by_season) per_season[s].push_back(mean_of(v));
    }
    for (const auto& [s, v] : per_season) out.seasons.push_back({key.strategy, key.months, s, t_interval(v)});
  }
  std::set<int> months_without_ift;
  for (const auto& p : out.periods)
    if (std::isnan(p.rri)) months_without_ift.insert(p.period_months);
  for (int m : months_without_ift)
    out.warnings.push_back("no ift rows for |x|=" + std::to_string(m) + "; RRI left empty");
  return out;
}

void write_summary(const std::filesystem::path& dir, const Summary& s, const std::string& config_hash) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_csv(dir / "yearly_rmse.csv", config_hash, "strategy,period_months,year,rmse,rmse_ci95,n_buildings");
    for (const auto& r : s.yearly)
      out << r.strategy << ',' << r.period_months << ',' << r.year << ',' << num(r.rmse.mean) << ','
          << num(r.rmse.half_width) << ',' << r.rmse.n << '\n';
  }
  {
    auto out = open_csv(dir / "period_comparison.csv", config_hash,
                        "strategy,period_months,rmse,rmse_ci95,mase,mase_ci95,rri,rri_buildings,rri_ci95,n_buildings");
    for (const auto& r : s.periods)
      out << r.strategy << ',' << r.period_months << ',' << num(r.rmse.mean) << ',' << num(r.rmse.half_width) << ','
          << num(r.mase.mean) << ',' << num(r.mase.half_width) << ',' << num(r.rri) << ','
          << num(r.rri_buildings.mean) << ',' << num(r.rri_buildings.half_width) << ',' << r.rmse.n << '\n';
  }
  {
    auto out = open_csv(dir / "seasonal_curve.csv", config_hash,
                        "strategy,period_months,update_n,test_start,season,rmse,rmse_ci95,n_buildings");
    for (const auto& r : s.seasonal)
      out << r.strategy << ',' << r.period_months << ',' << r.update_n << ',' << to_iso(r.test_start) << ','
          << r.season << ',' << num(r.rmse.mean) << ',' << num(r.rmse.half_width) << ',' << r.rmse.n << '\n';
  }
  {
    auto out = open_csv(dir / "seasonal_summary.csv", config_hash,
                        "strategy,period_months,season,rmse,rmse_ci95,n_buildings");
    for (const auto& r : s.seasons)
      out << r.strategy << ',' << r.period_months << ',' << r.season << ',' << num(r.rmse.mean) << ','
          << num(r.rmse.half_width) << ',' << r.rmse.n << '\n';
  }
}

}  // namespace thermadapt
