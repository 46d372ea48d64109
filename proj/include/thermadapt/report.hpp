#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "thermadapt/calendar.hpp"
#include "thermadapt/harness.hpp"

namespace thermadapt {

/// Mean with a two-sided t-interval half width over n values (NaN for n < 2).
struct IntervalStat {
  double mean = 0.0;
  double half_width = 0.0;
  int n = 0;
};

IntervalStat t_interval(std::span<const double> values, double level = 0.95);

struct YearlyRow {
  std::string strategy;
  int period_months = 1;
  int year = 1;
  IntervalStat rmse;
};

struct PeriodRow {
  std::string strategy;
  int period_months = 1;
  IntervalStat rmse;
  IntervalStat mase;
  /// Relative improvement of the across-building mean RMSE over IFT's.
  double rri = 0.0;
  /// Per-building RRI with its interval.
  IntervalStat rri_buildings;
};

struct SeasonalRow {
  std::string strategy;
  int period_months = 1;
  int update_n = 1;
  Minutes test_start = 0;
  std::string season;
  IntervalStat rmse;
};

struct SeasonSummaryRow {
  std::string strategy;
  int period_months = 1;
  std::string season;
  IntervalStat rmse;
};

struct Summary {
  std::vector<YearlyRow> yearly;
  std::vector<PeriodRow> periods;
  std::vector<SeasonalRow> seasonal;
  std::vector<SeasonSummaryRow> seasons;
  std::vector<std::string> warnings;
};

/// Calendar year (1-based) of the test period that follows update n.
int test_year(int update_n, int period_months);
/// Season of the first month of the test period that follows update n.
std::string test_season(int update_n, int period_months, Minutes series_start = default_series_start());

/// Rows repeated for the same (building, strategy, |x|, n), e.g. from several
/// replicate logs, are averaged first. Throws DataError on empty input.
Summary aggregate(std::span<const ResultRow> rows, Minutes series_start = default_series_start());

/// yearly_rmse.csv, period_comparison.csv, seasonal_curve.csv, seasonal_summary.csv.
void write_summary(const std::filesystem::path& dir, const Summary& s, const std::string& config_hash);

}  // namespace thermadapt
