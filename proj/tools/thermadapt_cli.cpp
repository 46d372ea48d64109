// thermadapt: simulate -> pretrain -> run -> report
#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "thermadapt/config.hpp"
#include "thermadapt/errors.hpp"
#include "thermadapt/harness.hpp"
#include "thermadapt/report.hpp"

namespace fs = std::filesystem;
using namespace thermadapt;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::string out;
  bool dry_run = false;
};

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.jobs) c.jobs = *o.jobs;
  if (!o.out.empty()) c.output_dir = o.out;
  c.validate();
  return c;
}

int cmd_simulate(const ExperimentConfig& c, bool dry_run) {
  const auto hash = config_hash(c);
  if (dry_run) {
    const auto targets = make_targets(c);
    const auto sources = make_sources(c, targets);
    std::printf("scenario %s, %d years, config_hash=%s\n", scenario_name(c.scenario).c_str(), c.years, hash.c_str());
    for (const auto& t : targets)
      std::printf("target %s -> %s (%zu schedule events)\n", t.name.c_str(),
                  (c.data_dir() / "targets" / (t.name + ".csv")).c_str(), t.schedule.events.size());
    std::printf("%zu source buildings, %d years each -> %s\n", sources.size(), c.source_years,
                (c.data_dir() / "sources").c_str());
    return 0;
  }
  stamp_config(c.data_dir(), c);
  const auto data = simulate_all(c);
  write_simulated(c.data_dir(), data, hash);
  std::printf("wrote %zu targets and %zu sources to %s\n", data.targets.size(), data.sources.size(),
              c.data_dir().c_str());
  return 0;
}

int cmd_pretrain(const ExperimentConfig& c, bool dry_run) {
  check_manifest(c.data_dir());
  const auto sources = read_sources(c.data_dir());
  if (dry_run) {
    std::printf("would pretrain on %zu sources (%d epochs) -> %s\n", sources.size(), c.pretrain.epochs,
                c.general_model_path().c_str());
    return 0;
  }
  stamp_config(c.model_dir(), c);
  const auto g = pretrain_general(sources, c);
  const auto hash = config_hash(c);
  save_network(c.general_model_path(), g.net, hash);
  save_scaler(c.scaler_path(), g.scaler, hash);
  std::printf("general model: best val mse %.6g at epoch %d of %d, %zu train windows, %.1f s -> %s\n",
              g.report.best_val_loss, g.report.best_epoch, g.report.epochs_run, g.report.n_train, g.report.seconds,
              c.general_model_path().c_str());
  return 0;
}

int cmd_run(const ExperimentConfig& c, bool dry_run) {
  const auto targets = read_targets(c.data_dir());
  if (dry_run) {
    const auto plans = plan_runs(c, targets);
    for (const auto& p : plans)
      std::printf("%s %s |x|=%d: %d updates x %d seeds\n", p.building.c_str(), p.strategy.c_str(), p.period_months,
                  p.updates, c.n_seeds);
    std::printf("%zu runs planned, nothing written\n", plans.size());
    return 0;
  }
  GeneralModel g;
  g.scaler = load_scaler(c.scaler_path());
  const auto expected = init_network(0, c.hidden, kDefaultHorizon);
  g.net = load_network(c.general_model_path(), &expected);

  stamp_config(c.results_dir(), c);
  const auto hash = config_hash(c);
  std::size_t failures = 0;
  std::vector<ResultRow> all;
  for (int i = 0; i < c.n_seeds; ++i) {
    const auto log = run_experiment(c, targets, g, c.run_seed(i));
    const auto suffix = "_s" + std::to_string(i) + ".csv";
    write_result_log(c.results_dir() / ("result_log" + suffix), log.rows, hash);
    write_train_log(c.results_dir() / ("train_log" + suffix), log.train, hash);
    failures += log.failures.size();
    all.insert(all.end(), log.rows.begin(), log.rows.end());
  }
  std::map<std::pair<std::string, int>, std::pair<double, int>> means;
  for (const auto& r : all) {
    auto& m = means[{r.strategy, r.period_months}];
    m.first += r.rmse;
    ++m.second;
  }
  for (const auto& [k, m] : means)
    std::printf("%-8s |x|=%d  mean rmse %.4f  (%d rows)\n", k.first.c_str(), k.second, m.first / m.second, m.second);
  if (failures) {
    std::fprintf(stderr, "%zu run(s) failed; see log above\n", failures);
    return kExitRuntime;
  }
  return 0;
}

int cmd_report(const ExperimentConfig& c, const std::vector<std::string>& inputs, bool have_config) {
  std::vector<fs::path> paths(inputs.begin(), inputs.end());
  if (paths.empty() && fs::is_directory(c.results_dir()))
    for (const auto& e : fs::directory_iterator(c.results_dir()))
      if (e.path().filename().string().starts_with("result_log") && e.path().extension() == ".csv")
        paths.push_back(e.path());
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) throw DataError("report: no result logs (looked in " + c.results_dir().string() + ")");

  std::vector<ResultRow> rows;
  std::string hash;
  for (const auto& p : paths) {
    std::string h;
    auto part = read_result_log(p, &h);
    if (!hash.empty() && h != hash) spdlog::warn("{}: config_hash {} differs from {}", p.string(), h, hash);
    if (hash.empty()) hash = h;
    rows.insert(rows.end(), part.begin(), part.end());
  }
  if (have_config && !hash.empty() && hash != config_hash(c))
    spdlog::warn("result logs carry config_hash {} but the config resolves to {}", hash, config_hash(c));

  const auto summary = aggregate(rows);
  for (const auto& w : summary.warnings) spdlog::warn("{}", w);
  write_summary(c.report_dir(), summary, hash);
  for (const auto& p : summary.periods)
    std::printf("%-8s |x|=%d  rmse %.4f  mase %.4f  rri %+.3f\n", p.strategy.c_str(), p.period_months, p.rmse.mean,
                p.mase.mean, p.rri);
  std::printf("report written to %s\n", c.report_dir().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_default_logger(spdlog::stderr_color_mt("thermadapt"));

  CLI::App app{"Adaptive-learning benchmark for building thermal dynamics"};
  app.require_subcommand(1);
  Overrides o;
  bool quiet = false;
  std::vector<std::string> report_inputs;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "global seed (overrides config)");
    sub->add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--out", o.out, "output directory (overrides config)");
    sub->add_flag("--dry-run", o.dry_run, "print the plan, write nothing");
    sub->add_flag("-q,--quiet", quiet, "warnings and errors only");
  };
  auto* simulate = app.add_subcommand("simulate", "generate target and source building data");
  auto* pretrain = app.add_subcommand("pretrain", "train the general model on the source pool");
  auto* run = app.add_subcommand("run", "rolling update/test loop for every building, strategy and period");
  auto* report = app.add_subcommand("report", "summary tables from result logs");
  for (auto* sub : {simulate, pretrain, run, report}) add_common(sub);
  report->add_option("logs", report_inputs, "result log CSVs (default: <out>/results/result_log*.csv)")
      ->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  if (quiet) spdlog::set_level(spdlog::level::warn);

  ExperimentConfig c;
  try {
    c = resolve(o);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitUsage;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }

  try {
    if (*simulate) return cmd_simulate(c, o.dry_run);
    if (*pretrain) return cmd_pretrain(c, o.dry_run);
    if (*run) return cmd_run(c, o.dry_run);
    if (o.dry_run) {
      std::printf("would write report to %s\n", c.report_dir().c_str());
      return 0;
    }
    return cmd_report(c, report_inputs, !o.config.empty());
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
}
