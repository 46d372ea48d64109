#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "thermadapt/model.hpp"
#include "thermadapt/strategies.hpp"

namespace thermadapt {

enum class Scenario { no_drift, retrofit, occupancy, large_scale };

std::string scenario_name(Scenario s);
Scenario parse_scenario(const std::string& name);

struct TrainConfig {
  int epochs = 60;
  int batch_size = 64;
  double learning_rate = 1e-3;
  int max_batches_per_epoch = 0;
  int patience = 0;
  int max_val_windows = 0;

  TrainOptions options() const;
};

struct ExperimentConfig {
  Scenario scenario = Scenario::no_drift;
  std::vector<std::string> strategies = strategy_names();
  std::vector<int> period_months{1};
  int years = 5;
  std::uint64_t seed = 1;
  /// Fine-tuning replicates; replicate i trains with seed mix(seed, i).
  int n_seeds = 1;
  /// Reference building names (T1..T8) for the fixed-target scenarios; empty = all eight.
  std::vector<std::string> buildings;
  /// Random grid targets for large_scale.
  int n_targets = 40;
  int source_buildings = 16;
  int source_years = 2;
  int lookback = kDefaultLookback;
  int hidden = kDefaultHidden;
  TrainConfig pretrain{150, 64, 1e-3, 0, 0, 0};
  TrainConfig finetune{60, 64, 1e-3, 0, 0, 0};
  TrainConfig scratch{150, 64, 1e-3, 0, 0, 0};
  double ewc_lambda = 100.0;
  int ewc_capacity = 1000;
  int ewc_refresh = 250;
  int gem_samples = 250;
  int gem_memory_batch = 0;
  std::filesystem::path output_dir = "out";
  /// Empty = <output_dir>/model/general_model.json.
  std::filesystem::path general_model;
  int jobs = 1;

  std::filesystem::path data_dir() const { return output_dir / "data"; }
  std::filesystem::path model_dir() const { return output_dir / "model"; }
  std::filesystem::path results_dir() const { return output_dir / "results"; }
  std::filesystem::path report_dir() const { return output_dir / "report"; }
  std::filesystem::path general_model_path() const;
  std::filesystem::path scaler_path() const { return model_dir() / "scaler.json"; }

  StrategyConfig strategy_config() const;
  std::uint64_t run_seed(int replicate) const;
  /// Throws ConfigError on any invalid field.
  void validate() const;
};

/// Parses a config object; unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const ExperimentConfig& c);

/// FNV-1a of the resolved config, excluding fields that cannot change results
/// (jobs, output_dir). 16 hex digits.
std::string config_hash(const ExperimentConfig& c);

/// Writes the resolved config (with its hash) to `dir/config.resolved.json`.
void stamp_config(const std::filesystem::path& dir, const ExperimentConfig& c);

}  // namespace thermadapt
