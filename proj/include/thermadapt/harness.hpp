#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "thermadapt/building.hpp"
#include "thermadapt/config.hpp"
#include "thermadapt/dataset.hpp"
#include "thermadapt/drift.hpp"
#include "thermadapt/model.hpp"

namespace thermadapt {

struct TargetSpec {
  std::string name;
  BuildingParams params;
  OccupancyProfile occupancy;
  DriftSchedule schedule;
  std::uint64_t seed = 0;  // occupancy redraws after `occ` events
};

struct SourceSpec {
  std::string name;
  BuildingParams params;
  OccupancyProfile occupancy;
};

/// The eight reference buildings T1..T8 (fixed-event and no-drift scenarios) or distinct random
/// grid tuples with random schedules (large_scale).
std::vector<TargetSpec> make_targets(const ExperimentConfig& c);
/// Distinct grid tuples not used by any target.
std::vector<SourceSpec> make_sources(const ExperimentConfig& c, std::span<const TargetSpec> targets);
/// Throws ConfigError when a source shares its (u_wall, c_wall, f_win, a_ground, weather) tuple with a target.
void check_disjoint(std::span<const BuildingParams> sources, std::span<const BuildingParams> targets);

WeatherSeries target_weather(const ExperimentConfig& c, WeatherId id);
WeatherSeries source_weather(const ExperimentConfig& c, WeatherId id);

struct BuildingData {
  std::string name;
  TimeSeries series;
  DriftSchedule schedule;
};

struct SimulatedData {
  std::vector<TargetSpec> target_specs;
  std::vector<SourceSpec> source_specs;
  std::vector<BuildingData> targets;
  std::vector<BuildingData> sources;
};

SimulatedData simulate_all(const ExperimentConfig& c);

/// Writes targets/<name>.csv, targets/<name>_schedule.json, sources/<name>.csv
/// and manifest.json under `dir`.
void write_simulated(const std::filesystem::path& dir, const SimulatedData& data, const std::string& config_hash);
std::vector<BuildingData> read_targets(const std::filesystem::path& dir);
std::vector<BuildingData> read_sources(const std::filesystem::path& dir);
/// Re-checks source/target disjointness from the manifest.
void check_manifest(const std::filesystem::path& dir);

struct GeneralModel {
  Network net;
  Scaler scaler;
  TrainReport report;
};

/// Fits the scaler on the pooled source rows and trains a fresh network on
/// the per-building chronological splits of all sources.
GeneralModel pretrain_general(std::span<const BuildingData> sources, const ExperimentConfig& c);

struct Period {
  int index = 1;  // 1-based
  Minutes begin = 0;
  Minutes end = 0;
};

/// Calendar periods of `months` months covering `years` years from `start`.
std::vector<Period> make_periods(Minutes start, int years, int months);

struct ResultRow {
  std::string building;
  std::string strategy;
  int period_months = 1;
  int update_n = 1;
  double rmse = 0.0;
  double mase = 0.0;  // NaN when degenerate
  double train_seconds = 0.0;
  std::size_t stored_examples = 0;
};

/// Per-update training details, written next to the result log.
struct TrainRow {
  std::string building;
  std::string strategy;
  int period_months = 1;
  int update_n = 1;
  bool event = false;
  bool trained = false;
  int pool_periods = 0;
  std::size_t pool_windows = 0;
  std::size_t n_train = 0;
  int best_epoch = 0;
  int epochs_run = 0;
  double best_val_loss = 0.0;
};

struct RunLog {
  std::vector<ResultRow> rows;
  std::vector<TrainRow> train;
  std::vector<std::string> failures;
};

struct RunPlan {
  std::string building;
  std::string strategy;
  int period_months = 1;
  int updates = 0;
};

std::vector<RunPlan> plan_runs(const ExperimentConfig& c, std::span<const BuildingData> targets);

/// One (building, strategy, |x|) run: update on x_n, test on x_{n+1}, for n = 1 .. P-1.
RunLog run_single(const ExperimentConfig& c, const BuildingData& target, const std::string& strategy, int months,
                  const GeneralModel& general, std::uint64_t run_seed);

/// All runs of the config on a pool of `c.jobs` workers. A failing run is
/// recorded in `failures` and does not stop the others. Rows are ordered by
/// (building, strategy, |x|, n) in config order.
RunLog run_experiment(const ExperimentConfig& c, std::span<const BuildingData> targets, const GeneralModel& general,
                      std::uint64_t run_seed);

void write_result_log(const std::filesystem::path& path, std::span<const ResultRow> rows, const std::string& config_hash);
std::vector<ResultRow> read_result_log(const std::filesystem::path& path, std::string* config_hash = nullptr);
void write_train_log(const std::filesystem::path& path, std::span<const TrainRow> rows, const std::string& config_hash);

/// Runs fn(i) for i in [0, n) on `jobs` threads; rethrows nothing, returns per-index error messages (empty = ok).
std::vector<std::string> parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

}  // namespace thermadapt
