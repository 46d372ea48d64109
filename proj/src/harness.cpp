#include "thermadapt/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>
#include <tuple>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "thermadapt/errors.hpp"
#include "thermadapt/metrics.hpp"
#include "thermadapt/rng.hpp"

namespace thermadapt {

namespace {

using nlohmann::json;

struct ReferenceBuilding {
  const char* name;
  double u_wall, c_wall, f_win, a_ground, t_sp, dt_night;
  WeatherId weather;
};

constexpr std::array<ReferenceBuilding, 8> kReferenceBuildings{{
    {"T1", 0.25, 40.0, 0.16, 70.0, 22.0, 1.0, WeatherId::bratislava},
    {"T2", 0.25, 280.0, 0.19, 100.0, 21.0, 0.0, WeatherId::amsterdam},
    {"T3", 0.55, 150.0, 0.16, 70.0, 23.0, 0.0, WeatherId::amsterdam},
    {"T4", 0.55, 280.0, 0.19, 100.0, 20.5, 1.5, WeatherId::munich},
    {"T5", 0.85, 40.0, 0.16, 70.0, 22.0, 2.5, WeatherId::munich},
    {"T6", 0.85, 150.0, 0.19, 100.0, 22.5, 0.5, WeatherId::bratislava},
    {"T7", 1.15, 280.0, 0.16, 70.0, 23.0, 0.0, WeatherId::bratislava},
    {"T8", 1.15, 40.0, 0.19, 100.0, 23.0, 1.5, WeatherId::amsterdam},
}};

constexpr std::array<WeatherId, 3> kLocations{WeatherId::munich, WeatherId::amsterdam, WeatherId::bratislava};

using Tuple = std::tuple<double, double, double, double, WeatherId>;

Tuple tuple_of(const BuildingParams& p) { return {p.u_wall, p.c_wall, p.f_win, p.a_ground, p.weather}; }

std::vector<BuildingParams> full_grid() {
  std::vector<BuildingParams> grid;
  for (double u : kWallUValues)
    for (double c : kWallCapacities)
      for (double f : kWindowRatios)
        for (double a : kGroundAreas)
          for (auto w : kLocations) grid.push_back(make_building(u, c, f, a, w));
  return grid;
}

std::string numbered(char prefix, std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%c%02zu", prefix, i + 1);
  return buf;
}

bool period_has_event(const DriftSchedule& s, const Period& p) {
  for (const auto& e : s.events)
    if (e.kind != DriftKind::end && e.time >= p.begin && e.time < p.end) return true;
  return false;
}

json params_json(const std::string& name, const BuildingParams& p, const OccupancyProfile& occ) {
  return {{"name", name},         {"u_wall", p.u_wall},        {"c_wall", p.c_wall},
          {"f_win", p.f_win},     {"a_ground", p.a_ground},    {"weather", std::string(weather_name(p.weather))},
          {"t_sp_day", occ.t_sp_day}, {"dt_night", occ.dt_night}};
}

BuildingParams params_from_json(const json& j) {
  return make_building(j.at("u_wall").get<double>(), j.at("c_wall").get<double>(), j.at("f_win").get<double>(),
                       j.at("a_ground").get<double>(), parse_weather(j.at("weather").get<std::string>()));
}

json read_manifest(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.json";
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string() + " (run `simulate` first)");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

std::string fmt_double(double v, const char* f = "%.9g") {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

std::vector<TargetSpec> make_targets(const ExperimentConfig& c) {
  const Minutes start = default_series_start();
  std::vector<TargetSpec> out;
  if (c.scenario == Scenario::large_scale) {
    auto grid = full_grid();
    if (static_cast<std::size_t>(c.n_targets) > grid.size())
      throw ConfigError("n_targets: at most " + std::to_string(grid.size()) + " distinct grid buildings");
    Rng rng(mix_seed(c.seed, {fnv1a("large-scale-targets")}));
    std::shuffle(grid.begin(), grid.end(), rng);
    for (int i = 0; i < c.n_targets; ++i) {
      const auto idx = static_cast<std::uint64_t>(i);
      TargetSpec t;
      t.name = numbered('L', static_cast<std::size_t>(i));
      t.params = grid[static_cast<std::size_t>(i)];
      t.occupancy = generate_occupancy(mix_seed(c.seed, {fnv1a("target-occupancy"), idx}));
      t.schedule = generate_drift_schedule(mix_seed(c.seed, {fnv1a("target-schedule"), idx}), c.years, start);
      t.seed = mix_seed(c.seed, {fnv1a("target-drift"), idx});
      out.push_back(std::move(t));
    }
    return out;
  }
  for (std::size_t i = 0; i < kReferenceBuildings.size(); ++i) {
    const auto& e = kReferenceBuildings[i];
    if (!c.buildings.empty() && std::find(c.buildings.begin(), c.buildings.end(), e.name) == c.buildings.end())
      continue;
    TargetSpec t;
    t.name = e.name;
    t.params = make_building(e.u_wall, e.c_wall, e.f_win, e.a_ground, e.weather);
    t.occupancy = generate_occupancy(mix_seed(c.seed, {fnv1a("target-occupancy"), i}), e.t_sp, e.dt_night);
    switch (c.scenario) {
      case Scenario::retrofit: t.schedule = fixed_event_schedule(DriftKind::retro, start, c.years); break;
      case Scenario::occupancy: t.schedule = fixed_event_schedule(DriftKind::occ, start, c.years); break;
      default: t.schedule = no_drift_schedule(start, c.years); break;
    }
    t.seed = mix_seed(c.seed, {fnv1a("target-drift"), i});
    out.push_back(std::move(t));
  }
  return out;
}

void check_disjoint(std::span<const BuildingParams> sources, std::span<const BuildingParams> targets) {
  for (const auto& s : sources)
    for (const auto& t : targets)
      if (tuple_of(s) == tuple_of(t))
        throw ConfigError("source pool overlaps a target building (u_wall=" + fmt_double(s.u_wall) +
                          ", c_wall=" + fmt_double(s.c_wall) + ", f_win=" + fmt_double(s.f_win) +
                          ", a_ground=" + fmt_double(s.a_ground) + ", weather=" + std::string(weather_name(s.weather)) +
                          ")");
}

std::vector<SourceSpec> make_sources(const ExperimentConfig& c, std::span<const TargetSpec> targets) {
  std::vector<BuildingParams> free;
  for (const auto& p : full_grid()) {
    bool used = false;
    for (const auto& t : targets) used = used || tuple_of(t.params) == tuple_of(p);
    if (!used) free.push_back(p);
  }
  if (static_cast<std::size_t>(c.source_buildings) > free.size())
    throw ConfigError("source_buildings: only " + std::to_string(free.size()) +
                      " grid buildings remain after excluding the targets");
  Rng rng(mix_seed(c.seed, {fnv1a("source-pool")}));
  std::shuffle(free.begin(), free.end(), rng);
  std::vector<SourceSpec> out;
  for (int i = 0; i < c.source_buildings; ++i) {
    SourceSpec s;
    s.name = numbered('S', static_cast<std::size_t>(i));
    s.params = free[static_cast<std::size_t>(i)];
    s.occupancy = generate_occupancy(mix_seed(c.seed, {fnv1a("source-occupancy"), static_cast<std::uint64_t>(i)}));
    out.push_back(std::move(s));
  }
  return out;
}

WeatherSeries target_weather(const ExperimentConfig& c, WeatherId id) {
  return synth_weather(id, c.years, mix_seed(c.seed, {fnv1a("target-weather"), static_cast<std::uint64_t>(id)}));
}

WeatherSeries source_weather(const ExperimentConfig& c, WeatherId id) {
  return synth_weather(id, c.source_years,
                       mix_seed(c.seed, {fnv1a("source-weather"), static_cast<std::uint64_t>(id)}));
}

SimulatedData simulate_all(const ExperimentConfig& c) {
  SimulatedData d;
  d.target_specs = make_targets(c);
  d.source_specs = make_sources(c, d.target_specs);

  std::map<WeatherId, WeatherSeries> tw, sw;
  for (auto id : kLocations) {
    tw[id] = target_weather(c, id);
    sw[id] = source_weather(c, id);
  }

  const std::size_t nt = d.target_specs.size();
  d.targets.resize(nt);
  d.sources.resize(d.source_specs.size());
  const auto errors = parallel_for(nt + d.sources.size(), c.jobs, [&](std::size_t i) {
    if (i < nt) {
      const auto& t = d.target_specs[i];
      auto ts = generate_target_timeseries(t.params, t.occupancy, tw.at(t.params.weather), t.schedule, t.seed);
      d.targets[i] = {t.name, std::move(ts.series), t.schedule};
    } else {
      const auto& s = d.source_specs[i - nt];
      const Minutes start = default_series_start();
      auto ts = generate_target_timeseries(s.params, s.occupancy, sw.at(s.params.weather),
                                           no_drift_schedule(start, c.source_years), 0);
      d.sources[i - nt] = {s.name, std::move(ts.series), no_drift_schedule(start, c.source_years)};
    }
  });
  for (std::size_t i = 0; i < errors.size(); ++i)
    if (!errors[i].empty())
      throw NumericError("simulation of " + (i < nt ? d.target_specs[i].name : d.source_specs[i - nt].name) +
                         " failed: " + errors[i]);
  return d;
}

void write_simulated(const std::filesystem::path& dir, const SimulatedData& data, const std::string& config_hash) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "targets");
  fs::create_directories(dir / "sources");
  const std::string comment = "config_hash=" + config_hash;
  json manifest{{"config_hash", config_hash}, {"targets", json::array()}, {"sources", json::array()}};
  for (std::size_t i = 0; i < data.targets.size(); ++i) {
    const auto& b = data.targets[i];
    write_timeseries_csv(dir / "targets" / (b.name + ".csv"), b.series, comment);
    write_schedule_json(dir / "targets" / (b.name + "_schedule.json"), b.schedule);
    manifest["targets"].push_back(params_json(b.name, data.target_specs[i].params, data.target_specs[i].occupancy));
  }
  for (std::size_t i = 0; i < data.sources.size(); ++i) {
    const auto& b = data.sources[i];
    write_timeseries_csv(dir / "sources" / (b.name + ".csv"), b.series, comment);
    manifest["sources"].push_back(params_json(b.name, data.source_specs[i].params, data.source_specs[i].occupancy));
  }
  const auto path = dir / "manifest.json";
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << manifest.dump(2) << '\n';
}

std::vector<BuildingData> read_targets(const std::filesystem::path& dir) {
  const json m = read_manifest(dir);
  std::vector<BuildingData> out;
  for (const auto& t : m.at("targets")) {
    const auto name = t.at("name").get<std::string>();
    out.push_back({name, read_timeseries_csv(dir / "targets" / (name + ".csv")),
                   read_schedule_json(dir / "targets" / (name + "_schedule.json"))});
  }
  return out;
}

std::vector<BuildingData> read_sources(const std::filesystem::path& dir) {
  const json m = read_manifest(dir);
  std::vector<BuildingData> out;
  for (const auto& s : m.at("sources")) {
    const auto name = s.at("name").get<std::string>();
    auto series = read_timeseries_csv(dir / "sources" / (name + ".csv"));
    const Minutes start = series.empty() ? default_series_start() : series.time.front();
    out.push_back({name, std::move(series), DriftSchedule{{{DriftKind::end, start}}}});
  }
  return out;
}

void check_manifest(const std::filesystem::path& dir) {
  const json m = read_manifest(dir);
  std::vector<BuildingParams> sources, targets;
  try {
    for (const auto& s : m.at("sources")) sources.push_back(params_from_json(s));
    for (const auto& t : m.at("targets")) targets.push_back(params_from_json(t));
  } catch (const json::exception& e) {
    throw IoError((dir / "manifest.json").string() + ": " + e.what());
  }
  check_disjoint(sources, targets);
}

GeneralModel pretrain_general(std::span<const BuildingData> sources, const ExperimentConfig& c) {
  if (sources.empty()) throw DataError("pretrain_general: empty source pool");
  std::vector<FramePtr> frames;
  for (const auto& s : sources) frames.push_back(make_frame(s.series));
  GeneralModel g;
  g.scaler = fit_scaler(frames);

  WindowedDataset train_ds(c.lookback, kDefaultHorizon), val_ds(c.lookback, kDefaultHorizon);
  for (const auto& f : frames) {
    auto split = split_train_val(window(apply_scaler(f, g.scaler), c.lookback, kDefaultHorizon));
    train_ds.append(split.train);
    val_ds.append(split.val);
  }
  auto opts = c.pretrain.options();
  opts.seed = mix_seed(c.seed, {fnv1a("general-train")});
  auto result = train(init_network(mix_seed(c.seed, {fnv1a("general-init")}), c.hidden, kDefaultHorizon), train_ds,
                      val_ds, opts);
  g.net = std::move(result.net);
  g.report = std::move(result.report);
  return g;
}

std::vector<Period> make_periods(Minutes start, int years, int months) {
  if (months < 1 || 12 % months != 0) throw ConfigError("period length must divide 12 months");
  const int count = 12 * years / months;
  std::vector<Period> out;
  for (int k = 0; k < count; ++k)
    out.push_back({k + 1, add_months(start, k * months), add_months(start, (k + 1) * months)});
  return out;
}

std::vector<RunPlan> plan_runs(const ExperimentConfig& c, std::span<const BuildingData> targets) {
  std::vector<RunPlan> plans;
  for (const auto& t : targets)
    for (const auto& s : c.strategies)
      for (int m : c.period_months) plans.push_back({t.name, s, m, 12 * c.years / m - 1});
  return plans;
}

RunLog run_single(const ExperimentConfig& c, const BuildingData& target, const std::string& strategy, int months,
                  const GeneralModel& general, std::uint64_t run_seed) {
  if (target.series.empty()) throw DataError(target.name + ": empty series");
  if (general.net.hidden != c.hidden)
    throw DimensionError("general model hidden size " + std::to_string(general.net.hidden) +
                         " does not match config hidden " + std::to_string(c.hidden));
  const auto raw = make_frame(target.series);
  const auto scaled = apply_scaler(raw, general.scaler);
  const auto periods = make_periods(target.series.time.front(), c.years, months);
  if (target.series.time.back() + kStepMinutes < periods.back().end)
    throw DataError(target.name + ": series ends before the last period (" + to_iso(periods.back().end) + ")");

  auto strat = make_strategy(strategy, c.strategy_config());
  RunLog log;
  Network previous;
  const std::uint64_t building_tag = fnv1a(target.name);
  for (std::size_t k = 0; k + 1 < periods.size(); ++k) {
    const int n = static_cast<int>(k) + 1;
    const auto x_n = window_range(scaled, periods[k].begin, periods[k].end, c.lookback, kDefaultHorizon);
    UpdateContext ctx;
    ctx.n = n;
    ctx.period_months = months;
    ctx.x_n = &x_n;
    ctx.general = &general.net;
    ctx.previous = n > 1 ? &previous : nullptr;
    ctx.event_flag = period_has_event(target.schedule, periods[k]);
    ctx.seed = mix_seed(run_seed, {building_tag, static_cast<std::uint64_t>(months), static_cast<std::uint64_t>(n)});

    const auto t0 = std::chrono::steady_clock::now();
    auto outcome = strat->update(ctx);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const auto test_scaled = window_range(scaled, periods[k + 1].begin, periods[k + 1].end, c.lookback, kDefaultHorizon);
    const auto test_raw = window_range(raw, periods[k + 1].begin, periods[k + 1].end, c.lookback, kDefaultHorizon);
    Matrix pred = predict(outcome.net, test_scaled);
    for (auto& v : pred.values()) v = general.scaler.unscale_target(v);
    const Matrix truth = test_raw.targets();
    const auto anchors = test_raw.anchors();
    const auto m = mase(truth, pred, anchors);

    log.rows.push_back({target.name, strategy, months, n, rmse(truth, pred), m.degenerate ? NAN : m.value, secs,
                        strat->stored_examples()});
    log.train.push_back({target.name, strategy, months, n, ctx.event_flag, outcome.trained, outcome.pool_periods,
                         outcome.pool_windows, outcome.report.n_train, outcome.report.best_epoch,
                         outcome.report.epochs_run, outcome.report.best_val_loss});
    previous = std::move(outcome.net);
  }
  return log;
}

RunLog run_experiment(const ExperimentConfig& c, std::span<const BuildingData> targets, const GeneralModel& general,
                      std::uint64_t run_seed) {
  const auto plans = plan_runs(c, targets);
  std::vector<RunLog> logs(plans.size());
  std::map<std::string, const BuildingData*> by_name;
  for (const auto& t : targets) by_name[t.name] = &t;

  const auto errors = parallel_for(plans.size(), c.jobs, [&](std::size_t i) {
    const auto& p = plans[i];
    spdlog::info("run {} / {} / |x|={}", p.building, p.strategy, p.period_months);
    logs[i] = run_single(c, *by_name.at(p.building), p.strategy, p.period_months, general, run_seed);
  });

  RunLog merged;
  for (std::size_t i = 0; i < plans.size(); ++i) {
    if (!errors[i].empty()) {
      const auto& p = plans[i];
      merged.failures.push_back(p.building + "/" + p.strategy + "/|x|=" + std::to_string(p.period_months) + ": " +
                                errors[i]);
      spdlog::error("run failed: {}", merged.failures.back());
      continue;
    }
    merged.rows.insert(merged.rows.end(), logs[i].rows.begin(), logs[i].rows.end());
    merged.train.insert(merged.train.end(), logs[i].train.begin(), logs[i].train.end());
  }
  return merged;
}

void write_result_log(const std::filesystem::path& path, std::span<const ResultRow> rows,
                      const std::string& config_hash) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  if (!config_hash.empty()) out << "# config_hash=" << config_hash << '\n';
  out << "building,strategy,period_months,update_n,rmse,mase,train_seconds,stored_examples\n";
  for (const auto& r : rows)
    out << r.building << ',' << r.strategy << ',' << r.period_months << ',' << r.update_n << ','
        << fmt_double(r.rmse) << ',' << fmt_double(r.mase) << ',' << fmt_double(r.train_seconds, "%.4f") << ','
        << r.stored_examples << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

std::vector<ResultRow> read_result_log(const std::filesystem::path& path, std::string* config_hash) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<ResultRow> rows;
  std::string line;
  bool header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string key = "# config_hash=";
      if (config_hash && line.rfind(key, 0) == 0) *config_hash = line.substr(key.size());
      continue;
    }
    if (!header) {
      if (line != "building,strategy,period_months,update_n,rmse,mase,train_seconds,stored_examples")
        throw DataError(path.string() + ": unexpected header '" + line + "'");
      header = true;
      continue;
    }
    const auto cells = split_csv(line);
    if (cells.size() != 8)
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected 8 columns, got " +
                      std::to_string(cells.size()));
    try {
      ResultRow r;
      r.building = cells[0];
      r.strategy = cells[1];
      r.period_months = std::stoi(cells[2]);
      r.update_n = std::stoi(cells[3]);
      r.rmse = std::stod(cells[4]);
      r.mase = cells[5] == "nan" ? NAN : std::stod(cells[5]);
      r.train_seconds = std::stod(cells[6]);
      r.stored_examples = std::stoull(cells[7]);
      rows.push_back(std::move(r));
    } catch (const std::exception&) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": malformed row '" + line + "'");
    }
  }
  if (!header) throw DataError(path.string() + ": missing header");
  return rows;
}

void write_train_log(const std::filesystem::path& path, std::span<const TrainRow> rows,
                     const std::string& config_hash) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  if (!config_hash.empty()) out << "# config_hash=" << config_hash << '\n';
  out << "building,strategy,period_months,update_n,event,trained,pool_periods,pool_windows,n_train,best_epoch,"
         "epochs_run,best_val_loss\n";
  for (const auto& r : rows)
    out << r.building << ',' << r.strategy << ',' << r.period_months << ',' << r.update_n << ',' << int(r.event) << ','
        << int(r.trained) << ',' << r.pool_periods << ',' << r.pool_windows << ',' << r.n_train << ','
        << r.best_epoch << ',' << r.epochs_run << ',' << fmt_double(r.best_val_loss) << '\n';
}

std::vector<std::string> parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  std::vector<std::string> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < n;) {
      try {
        fn(i);
      } catch (const std::exception& e) {
        errors[i] = e.what();
        if (errors[i].empty()) errors[i] = "unknown error";
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::max(1, jobs));
  if (threads == 1 || n <= 1) {
    worker();
    return errors;
  }
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < std::min(threads, n); ++t) pool.emplace_back(worker);
  }
  return errors;
}

}  // namespace thermadapt
