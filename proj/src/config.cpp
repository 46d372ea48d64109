#include "thermadapt/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "thermadapt/errors.hpp"
#include "thermadapt/rng.hpp"

namespace thermadapt {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (const auto& [key, value] : j.items())
    if (!known.contains(key)) {
      std::string list;
      for (const auto& k : known) list += (list.empty() ? "" : ", ") + k;
      throw ConfigError(where + ": unknown key '" + key + "' (known: " + list + ")");
    }
}

template <typename T>
void read(const json& j, const char* key, T& into, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    into = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type " + std::string(j.at(key).type_name()));
  }
}

TrainConfig train_from_json(const json& j, TrainConfig base, const std::string& where) {
  reject_unknown(j, {"epochs", "batch_size", "learning_rate", "max_batches_per_epoch", "patience", "max_val_windows"},
                 where);
  read(j, "epochs", base.epochs, where);
  read(j, "batch_size", base.batch_size, where);
  read(j, "learning_rate", base.learning_rate, where);
  read(j, "max_batches_per_epoch", base.max_batches_per_epoch, where);
  read(j, "patience", base.patience, where);
  read(j, "max_val_windows", base.max_val_windows, where);
  return base;
}

json train_to_json(const TrainConfig& t) {
  return {{"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"learning_rate", t.learning_rate},
          {"max_batches_per_epoch", t.max_batches_per_epoch},
          {"patience", t.patience},
          {"max_val_windows", t.max_val_windows}};
}

void validate_train(const TrainConfig& t, const std::string& where) {
  if (t.epochs < 1) throw ConfigError(where + ".epochs must be >= 1");
  if (t.batch_size < 1) throw ConfigError(where + ".batch_size must be >= 1");
  if (!(t.learning_rate > 0.0)) throw ConfigError(where + ".learning_rate must be > 0");
  if (t.max_batches_per_epoch < 0 || t.patience < 0 || t.max_val_windows < 0)
    throw ConfigError(where + ": caps must be >= 0");
}

const std::vector<std::string>& table2_names() {
  static const std::vector<std::string> names{"T1", "T2", "T3", "T4", "T5", "T6", "T7", "T8"};
  return names;
}

}  // namespace

std::string scenario_name(Scenario s) {
  switch (s) {
    case Scenario::no_drift: return "no_drift";
    case Scenario::retrofit: return "retrofit";
    case Scenario::occupancy: return "occupancy";
    case Scenario::large_scale: return "large_scale";
  }
  return "unknown";
}

Scenario parse_scenario(const std::string& name) {
  for (auto s : {Scenario::no_drift, Scenario::retrofit, Scenario::occupancy, Scenario::large_scale})
    if (scenario_name(s) == name) return s;
  throw ConfigError("unknown scenario '" + name + "' (valid: no_drift, retrofit, occupancy, large_scale)");
}

TrainOptions TrainConfig::options() const {
  TrainOptions o;
  o.max_epochs = epochs;
  o.batch_size = batch_size;
  o.adam.learning_rate = learning_rate;
  o.max_batches_per_epoch = max_batches_per_epoch;
  o.patience = patience;
  o.max_val_windows = max_val_windows;
  return o;
}

std::filesystem::path ExperimentConfig::general_model_path() const {
  return general_model.empty() ? model_dir() / "general_model.json" : general_model;
}

StrategyConfig ExperimentConfig::strategy_config() const {
  StrategyConfig s;
  s.finetune = finetune.options();
  s.scratch = scratch.options();
  s.hidden = hidden;
  s.ewc_lambda = ewc_lambda;
  s.ewc_capacity = static_cast<std::size_t>(ewc_capacity);
  s.ewc_refresh = static_cast<std::size_t>(ewc_refresh);
  s.gem_samples = static_cast<std::size_t>(gem_samples);
  s.gem_memory_batch = static_cast<std::size_t>(gem_memory_batch);
  return s;
}

std::uint64_t ExperimentConfig::run_seed(int replicate) const {
  return mix_seed(seed, {fnv1a("run-replicate"), static_cast<std::uint64_t>(replicate)});
}

void ExperimentConfig::validate() const {
  if (strategies.empty()) throw ConfigError("strategies: at least one strategy required");
  for (const auto& s : strategies)
    if (std::find(strategy_names().begin(), strategy_names().end(), s) == strategy_names().end())
      make_strategy(s, StrategyConfig{});  // throws with the list of valid names
  if (period_months.empty()) throw ConfigError("period_months: at least one value required");
  for (int m : period_months)
    if (m < 1 || m > 3) throw ConfigError("period_months: " + std::to_string(m) + " is not one of 1, 2, 3");
  if (years < 1) throw ConfigError("years must be >= 1");
  if ((scenario == Scenario::retrofit || scenario == Scenario::occupancy) && years < 3)
    throw ConfigError("years must be >= 3 for the fixed-event scenarios (event on 1 April of year 3)");
  if (n_seeds < 1) throw ConfigError("n_seeds must be >= 1");
  for (const auto& b : buildings)
    if (std::find(table2_names().begin(), table2_names().end(), b) == table2_names().end())
      throw ConfigError("buildings: '" + b + "' is not one of T1..T8");
  if (scenario == Scenario::large_scale && !buildings.empty())
    throw ConfigError("buildings: not used by large_scale (use n_targets)");
  if (n_targets < 1) throw ConfigError("n_targets must be >= 1");
  if (source_buildings < 1 || source_years < 1) throw ConfigError("source_buildings and source_years must be >= 1");
  if (lookback < 1) throw ConfigError("lookback must be >= 1");
  if (hidden < 1) throw ConfigError("hidden must be >= 1");
  validate_train(pretrain, "pretrain");
  validate_train(finetune, "finetune");
  validate_train(scratch, "scratch");
  if (!(ewc_lambda >= 0.0)) throw ConfigError("ewc.lambda must be >= 0");
  if (ewc_capacity < 1 || ewc_refresh < 1 || ewc_refresh > ewc_capacity)
    throw ConfigError("ewc: need 1 <= refresh <= capacity");
  if (gem_samples < 1 || gem_memory_batch < 0) throw ConfigError("gem: samples >= 1 and memory_batch >= 0 required");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
}

ExperimentConfig config_from_json(const json& j) {
  const std::string where = "config";
  reject_unknown(j,
                 {"scenario", "strategies", "period_months", "years", "seed", "n_seeds", "buildings", "n_targets",
                  "source_buildings", "source_years", "lookback", "hidden", "pretrain", "finetune", "scratch", "ewc",
                  "gem", "output_dir", "general_model", "jobs"},
                 where);
  ExperimentConfig c;
  if (j.contains("scenario")) {
    if (!j["scenario"].is_string()) throw ConfigError("config.scenario: expected a string");
    c.scenario = parse_scenario(j["scenario"].get<std::string>());
  }
  if (c.scenario == Scenario::large_scale) c.years = 7;
  read(j, "strategies", c.strategies, where);
  if (j.contains("period_months")) {
    if (j["period_months"].is_number_integer()) {
      c.period_months = {j["period_months"].get<int>()};
    } else {
      read(j, "period_months", c.period_months, where);
    }
  }
  read(j, "years", c.years, where);
  read(j, "seed", c.seed, where);
  read(j, "n_seeds", c.n_seeds, where);
  read(j, "buildings", c.buildings, where);
  read(j, "n_targets", c.n_targets, where);
  read(j, "source_buildings", c.source_buildings, where);
  read(j, "source_years", c.source_years, where);
  read(j, "lookback", c.lookback, where);
  read(j, "hidden", c.hidden, where);
  if (j.contains("pretrain")) c.pretrain = train_from_json(j["pretrain"], c.pretrain, "config.pretrain");
  if (j.contains("finetune")) c.finetune = train_from_json(j["finetune"], c.finetune, "config.finetune");
  if (j.contains("scratch")) c.scratch = train_from_json(j["scratch"], c.scratch, "config.scratch");
  if (j.contains("ewc")) {
    const auto& e = j["ewc"];
    reject_unknown(e, {"lambda", "capacity", "refresh"}, "config.ewc");
    read(e, "lambda", c.ewc_lambda, "config.ewc");
    read(e, "capacity", c.ewc_capacity, "config.ewc");
    read(e, "refresh", c.ewc_refresh, "config.ewc");
  }
  if (j.contains("gem")) {
    const auto& g = j["gem"];
    reject_unknown(g, {"samples", "memory_batch"}, "config.gem");
    read(g, "samples", c.gem_samples, "config.gem");
    read(g, "memory_batch", c.gem_memory_batch, "config.gem");
  }
  std::string path;
  if (j.contains("output_dir")) {
    read(j, "output_dir", path, where);
    c.output_dir = path;
  }
  if (j.contains("general_model")) {
    path.clear();
    read(j, "general_model", path, where);
    c.general_model = path;
  }
  read(j, "jobs", c.jobs, where);
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

json config_to_json(const ExperimentConfig& c) {
  return {{"scenario", scenario_name(c.scenario)},
          {"strategies", c.strategies},
          {"period_months", c.period_months},
          {"years", c.years},
          {"seed", c.seed},
          {"n_seeds", c.n_seeds},
          {"buildings", c.buildings},
          {"n_targets", c.n_targets},
          {"source_buildings", c.source_buildings},
          {"source_years", c.source_years},
          {"lookback", c.lookback},
          {"hidden", c.hidden},
          {"pretrain", train_to_json(c.pretrain)},
          {"finetune", train_to_json(c.finetune)},
          {"scratch", train_to_json(c.scratch)},
          {"ewc", {{"lambda", c.ewc_lambda}, {"capacity", c.ewc_capacity}, {"refresh", c.ewc_refresh}}},
          {"gem", {{"samples", c.gem_samples}, {"memory_batch", c.gem_memory_batch}}},
          {"output_dir", c.output_dir.string()},
          {"general_model", c.general_model.string()},
          {"jobs", c.jobs}};
}

std::string config_hash(const ExperimentConfig& c) {
  json j = config_to_json(c);
  j.erase("jobs");
  j.erase("output_dir");
  j.erase("general_model");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(j.dump())));
  return buf;
}

void stamp_config(const std::filesystem::path& dir, const ExperimentConfig& c) {
  std::filesystem::create_directories(dir);
  json j = config_to_json(c);
  j["config_hash"] = config_hash(c);
  const auto path = dir / "config.resolved.json";
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace thermadapt
