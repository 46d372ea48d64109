// Acceptance checks. One PASS/FAIL line per criterion; exit code 1 if any fail.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "support.hpp"
#include "thermadapt/config.hpp"
#include "thermadapt/drift.hpp"
#include "thermadapt/harness.hpp"
#include "thermadapt/metrics.hpp"
#include "thermadapt/report.hpp"
#include "thermadapt/strategies.hpp"

using namespace thermadapt;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

std::string strf(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1 ---------------------------------------------------------------------------

Verdict gradients() {
  std::mt19937_64 rng(2024);
  int checked = 0, bad = 0;
  double worst = 0.0;
  for (int pair = 0; pair < 50; ++pair) {
    const int hidden = 2 + static_cast<int>(rng() % 7);
    const auto net = init_network(rng(), hidden);
    const auto ds = testing::synthetic_windows(8, rng());
    std::vector<std::size_t> idx(1 + rng() % 4);
    for (auto& i : idx) i = rng() % ds.size();
    const auto sub = ds.select(idx);
    const auto lg = loss_and_gradients(net, ds, idx);
    for (std::size_t b = 0; b < net.params.size(); ++b)
      for (std::size_t i = 0; i < net.params[b].size(); ++i) {
        const double h = 1e-5;
        Network plus = net, minus = net;
        plus.params[b][i] += h;
        minus.params[b][i] -= h;
        const double fd = (mse(plus, sub) - mse(minus, sub)) / (2 * h);
        const double bp = lg.grads[b][i];
        const double rel = std::abs(bp - fd) / std::max({std::abs(bp), std::abs(fd), 1e-6});
        worst = std::max(worst, rel);
        bad += rel > 1e-4;
        ++checked;
      }
  }
  return {bad == 0, strf("50 pairs, %d parameters checked, %d over 1e-4, worst relative %.2e", checked, bad, worst)};
}

// 2 ---------------------------------------------------------------------------

Verdict metric_oracles() {
  std::vector<std::string> failed;
  auto expect = [&](bool ok, const char* what) {
    if (!ok) failed.push_back(what);
  };
  const Matrix truth{{20.0, 21.0}, {22.0, 23.0}};
  expect(rmse(truth, truth) == 0.0, "rmse zero");
  expect(std::abs(rmse(truth, Matrix{{20.5, 21.5}, {22.5, 23.5}}) - 0.5) < 1e-12, "rmse shift");
  expect(std::abs(rmse(truth, Matrix{{21.0, 21.0}, {22.0, 24.0}}) - std::sqrt(0.5)) < 1e-12, "rmse mixed");

  const Matrix t3{{20.0, 21.0, 22.0}, {19.0, 18.5, 18.0}};
  const std::vector<double> anchors{19.5, 19.0};
  const Matrix naive{{19.5, 19.5, 19.5}, {19.0, 19.0, 19.0}};
  expect(std::abs(mase(t3, naive, anchors).value - 1.0) < 1e-12, "mase naive");
  expect(mase(t3, t3, anchors).value == 0.0, "mase perfect");
  Matrix off = t3;
  for (auto& v : off.values()) v += 0.25;
  expect(std::abs(mase(t3, off, anchors).value - 0.25) < 1e-12, "mase quarter");
  const std::vector<double> flat{21.0, 21.0};
  expect(mase(Matrix{{21.0, 21.0}, {21.0, 21.0}}, Matrix{{21.1, 21.0}, {21.0, 21.0}}, flat).degenerate, "mase degenerate");

  expect(std::abs(rri(0.2, 0.15) - 0.25) < 1e-12, "rri quarter");
  expect(rri(0.3, 0.3) == 0.0, "rri equal");
  const double r = rri(0.109, 0.078);
  expect(std::abs(r - 31.0 / 109.0) < 1e-12, "rri hand value");
  expect(std::abs(r - 0.281) <= 0.005, "rri reported 28.1%");
  std::string list;
  for (const auto& f : failed) list += " " + f;
  return {failed.empty(), failed.empty() ? strf("13 oracles exact; RRI(0.109, 0.078) = %.4f vs 0.281", r)
                                         : "failed:" + list};
}

// 3 and 5 share small synthetic periods ---------------------------------------

std::vector<WindowedDataset> synthetic_periods(int count, std::size_t rows, bool ragged) {
  std::vector<std::size_t> sizes(static_cast<std::size_t>(count), rows);
  if (ragged)
    for (int k = 0; k < count; ++k) sizes[static_cast<std::size_t>(k)] += static_cast<std::size_t>(k);
  const std::size_t total = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
  const auto raw = make_frame(testing::synthetic_series(total, 5));
  const FramePtr frames[] = {raw};
  const auto frame = apply_scaler(raw, fit_scaler(frames));
  std::vector<WindowedDataset> out;
  Minutes b = frame->time.front();
  for (auto s : sizes) {
    const Minutes e = b + static_cast<Minutes>(s) * kStepMinutes;
    out.push_back(window_range(frame, b, e, kDefaultLookback, kDefaultHorizon));
    b = e;
  }
  return out;
}

StrategyConfig audit_config() {
  StrategyConfig c;
  c.hidden = 4;
  c.finetune.max_epochs = 1;
  c.finetune.batch_size = 16;
  c.finetune.max_batches_per_epoch = 1;
  c.finetune.max_val_windows = 16;
  c.scratch = c.finetune;
  c.gem_memory_batch = 8;
  c.ewc_capacity = 200;  // below one period, as with monthly data and the default 1000
  c.ewc_refresh = 50;
  return c;
}

struct Trace {
  std::vector<std::size_t> stored;
  std::vector<int> pool_periods;
  std::vector<std::size_t> pool_windows;
};

Trace drive(const std::string& name, const StrategyConfig& cfg, const std::vector<WindowedDataset>& periods, int updates,
            int months) {
  auto s = make_strategy(name, cfg);
  const Network general = init_network(7, cfg.hidden);
  Network previous;
  Trace t;
  for (int n = 1; n <= updates; ++n) {
    UpdateContext ctx;
    ctx.n = n;
    ctx.period_months = months;
    ctx.x_n = &periods[static_cast<std::size_t>(n - 1)];
    ctx.general = &general;
    ctx.previous = n > 1 ? &previous : nullptr;
    ctx.seed = static_cast<std::uint64_t>(n);
    auto o = s->update(ctx);
    previous = std::move(o.net);
    t.stored.push_back(s->stored_examples());
    t.pool_periods.push_back(o.pool_periods);
    t.pool_windows.push_back(o.pool_windows);
  }
  return t;
}

Verdict complexity() {
  const int updates = 36;
  const auto periods = synthetic_periods(updates, 300, false);
  const std::size_t w = periods[0].size();
  const auto cfg = audit_config();
  std::string detail;
  bool pass = true;
  for (const auto& name : strategy_names()) {
    if (name == "ealg") continue;  // drift-dependent; equals ALG without events
    const auto t = drive(name, cfg, periods, updates, 1);
    std::string shape;
    bool ok = true;
    if (name == "alg" || name == "gem" || name == "scratch") {
      const std::size_t slope = name == "gem" ? static_cast<std::size_t>(cfg.gem_samples) : w;
      for (int n = 1; n <= updates; ++n) ok = ok && t.stored[static_cast<std::size_t>(n - 1)] == slope * n;
      shape = strf("linear slope %zu", slope);
    } else {
      // SML holds a growing archive during the first year (no same-season data yet)
      const int from = name == "sml" ? 12 + 1 : 1;
      const std::size_t level = t.stored[static_cast<std::size_t>(from - 1)];
      for (int n = from; n <= updates; ++n) ok = ok && t.stored[static_cast<std::size_t>(n - 1)] == level;
      shape = strf("constant %zu from n=%d", level, from);
    }
    pass = pass && ok;
    detail += strf(" %s:%s%s;", name.c_str(), ok ? "" : "WRONG ", shape.c_str());
  }
  return {pass, strf("%d updates, %zu windows/period;", updates, w) + detail};
}

// 4 ---------------------------------------------------------------------------

Verdict gem_instances() {
  std::mt19937_64 rng(404);
  std::normal_distribution<double> nd;
  int infeasible = 0, beaten = 0, projected = 0;
  double worst_dot = 0.0;
  for (int inst = 0; inst < 200; ++inst) {
    const std::size_t dim = 5 + rng() % 60;
    const std::size_t k = 1 + rng() % 8;
    std::vector<double> g(dim);
    for (auto& v : g) v = nd(rng);
    std::vector<std::vector<double>> mem(k, std::vector<double>(dim));
    for (auto& m : mem)
      for (auto& v : m) v = nd(rng);
    const auto p = gem_project(g, mem);
    projected += p.projected;
    auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
      return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
    };
    auto dist2 = [&](const std::vector<double>& x) {
      double s = 0.0;
      for (std::size_t i = 0; i < dim; ++i) s += (x[i] - g[i]) * (x[i] - g[i]);
      return s;
    };
    for (const auto& m : mem) {
      worst_dot = std::min(worst_dot, dot(m, p.g));
      infeasible += dot(m, p.g) < -1e-6;
    }
    const double d0 = dist2(p.g);
    for (int sampled = 0, tries = 0; sampled < 200 && tries < 200000; ++tries) {
      const double scale = 0.01 + 0.5 * std::uniform_real_distribution<double>()(rng);
      std::vector<double> x(dim);
      for (std::size_t i = 0; i < dim; ++i) x[i] = p.g[i] + scale * nd(rng);
      if (std::any_of(mem.begin(), mem.end(), [&](const auto& m) { return dot(m, x) < 0.0; })) continue;
      ++sampled;
      beaten += dist2(x) < d0 - 1e-9;
    }
  }
  return {infeasible == 0 && beaten == 0,
          strf("200 instances (%d projected), %d infeasible, %d closer feasible samples, min dot %.1e", projected,
              infeasible, beaten, worst_dot)};
}

// 5 ---------------------------------------------------------------------------

std::vector<int> sml_oracle(int n, int months) {
  const int alpha = 12 / months;
  if (n - alpha - 1 < 1) return {n};
  return {n - alpha - 1, n - alpha, n - alpha + 1, n};
}

Verdict sml_indexing() {
  int mismatched = 0, checked = 0;
  for (int months : {1, 2, 3})
    for (int n = 1; n <= 84; ++n) {
      ++checked;
      mismatched += sml_pool_indices(n, months) != sml_oracle(n, months);
    }
  // the strategy must train on exactly those periods: ragged sizes make the
  // window total identify the set
  const auto periods = synthetic_periods(84, 40, true);
  auto cfg = audit_config();
  int pool_bad = 0;
  for (int months : {1, 2, 3}) {
    const auto t = drive("sml", cfg, periods, 84, months);
    for (int n = 1; n <= 84; ++n) {
      std::size_t expect = 0;
      for (int i : sml_oracle(n, months)) expect += periods[static_cast<std::size_t>(i - 1)].size();
      const auto k = static_cast<std::size_t>(n - 1);
      pool_bad += t.pool_windows[k] != expect ||
                  t.pool_periods[k] != static_cast<int>(sml_oracle(n, months).size());
    }
  }
  return {mismatched == 0 && pool_bad == 0,
          strf("%d index sets, %d mismatched; %d assembled pools off", checked, mismatched, pool_bad)};
}

// 6 ---------------------------------------------------------------------------

Verdict schedules() {
  const int n = 10000;
  int retro = 0;
  std::array<int, 4> counts{};
  for (int i = 0; i < n; ++i) {
    const auto s = generate_drift_schedule(900000 + static_cast<std::uint64_t>(i), 7);
    retro += s.retrofit_count();
    ++counts[static_cast<std::size_t>(s.occupancy_change_count())];
  }
  const double pr = retro / double(n);
  const double want[] = {0.25, 0.35, 0.30, 0.10};
  bool ok = std::abs(pr - 0.70) <= 0.01;
  std::string dist;
  for (int k = 0; k < 4; ++k) {
    const double f = counts[static_cast<std::size_t>(k)] / double(n);
    ok = ok && std::abs(f - want[k]) <= 0.01;
    dist += strf("%s%.4f", k ? "/" : "", f);
  }
  return {ok, strf("10000 schedules: retrofit %.4f, occupancy changes 0..3 = %s", pr, dist.c_str())};
}

// 7, 8 and 9 run the pipeline ---------------------------------------------------

struct Pipeline {
  ExperimentConfig config;
  SimulatedData data;
  GeneralModel general;
  std::vector<ResultRow> rows;
  std::vector<TrainRow> train;
  std::vector<std::string> failures;
};

Pipeline run_pipeline(const ExperimentConfig& c) {
  Pipeline p{c, simulate_all(c), {}, {}, {}, {}};
  p.general = pretrain_general(p.data.sources, c);
  for (int r = 0; r < c.n_seeds; ++r) {
    auto log = run_experiment(c, p.data.targets, p.general, c.run_seed(r));
    p.rows.insert(p.rows.end(), log.rows.begin(), log.rows.end());
    p.train.insert(p.train.end(), log.train.begin(), log.train.end());
    p.failures.insert(p.failures.end(), log.failures.begin(), log.failures.end());
  }
  return p;
}

Verdict trends(const ExperimentConfig& c, bool full) {
  const auto p = run_pipeline(c);
  if (!p.failures.empty()) return {false, "run failures: " + p.failures.front()};
  const auto s = aggregate(p.rows);
  std::map<std::string, std::map<int, double>> yearly;
  for (const auto& y : s.yearly)
    if (y.period_months == 1) yearly[y.strategy][y.year] = y.rmse.mean;

  std::string worst;
  double worst_v = -1.0;
  for (const auto& [name, years] : yearly)
    if (years.at(1) > worst_v) worst_v = years.at(1), worst = name;
  const bool a = worst == "scratch";

  bool cc = true;
  std::string rris;
  for (const auto& r : s.periods) {
    // Scratch is a baseline next to IFT, not one of the transfer/continual updaters
    if (r.period_months != 1 || r.strategy == "ift" || r.strategy == "scratch") continue;
    cc = cc && r.rri > 0.0;
    rris += strf(" %s %.3f", r.strategy.c_str(), r.rri);
  }

  bool b = true;
  std::string bs;
  for (const char* name : {"sml", "alg"}) {
    const auto& y = yearly[name];
    if (!y.contains(4) || !y.contains(5)) {
      b = false;
      bs += strf(" %s: no years 4-5", name);
      continue;
    }
    const double late = 0.5 * (y.at(4) + y.at(5));
    b = b && late <= 0.9 * y.at(1);
    bs += strf(" %s %.3f->%.3f", name, y.at(1), late);
  }

  double summer = NAN, winter = NAN;
  for (const auto& r : s.seasons)
    if (r.strategy == "ift" && r.period_months == 1) {
      if (r.season == "summer") summer = r.rmse.mean;
      if (r.season == "winter") winter = r.rmse.mean;
    }
  const bool d = summer > winter;

  std::string detail = strf("%s: (a) worst year-1 is %s %.3f %s; (c) RRI%s %s", full ? "full" : "smoke", worst.c_str(),
                           worst_v, a ? "ok" : "WRONG", rris.c_str(), cc ? "ok" : "WRONG");
  const std::string bd = strf("(b)%s %s; (d) ift summer %.3f winter %.3f %s", bs.c_str(), b ? "ok" : "no", summer,
                             winter, d ? "ok" : "no");
  if (full) return {a && b && cc && d, detail + "; " + bd};
  return {a && cc, detail + "; not asserted at smoke scale: " + bd};
}

Verdict drift_response(const ExperimentConfig& c) {
  const auto p = run_pipeline(c);
  if (!p.failures.empty()) return {false, "run failures: " + p.failures.front()};

  // the first update trained on a period containing the retrofit
  int event_train = 0;
  for (const auto& t : p.train)
    if (t.strategy == "ealg" && t.period_months == 1 && t.event && (!event_train || t.update_n < event_train))
      event_train = t.update_n;
  if (event_train < 8) return {false, "no retrofit event found in the eALG train log"};
  const int first = event_train - 1;  // its test period holds the event

  std::map<std::string, std::map<int, std::vector<double>>> by;
  for (const auto& r : p.rows)
    if (r.period_months == 1) by[r.strategy][r.update_n].push_back(r.rmse);
  auto mean_at = [&](const std::string& s, int n) {
    const auto& v = by[s][n];
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  bool spikes = true;
  double min_ratio = INFINITY;
  std::string low;
  for (const auto& [name, rows] : by) {
    double base = 0.0;
    for (int n = first - 6; n < first; ++n) base += mean_at(name, n) / 6.0;
    for (int n : {first, first + 1}) {
      const double ratio = mean_at(name, n) / base;
      min_ratio = std::min(min_ratio, ratio);
      if (ratio <= 1.0) {
        spikes = false;
        low += strf(" %s@%d", name.c_str(), n);
      }
    }
  }
  int pool = -1;
  for (const auto& t : p.train)
    if (t.strategy == "ealg" && t.period_months == 1 && t.update_n == event_train) pool = std::max(pool, t.pool_periods);
  const bool shrinks = pool >= 1 && pool <= 2;
  return {spikes && shrinks,
          strf("event in test period of update %d; updates %d-%d vs mean of %d-%d: min ratio %.2f%s; eALG pool at %d = "
              "%d period(s)",
              first, first, first + 1, first - 6, first - 1, min_ratio, low.empty() ? "" : (" low:" + low).c_str(),
              event_train, pool)};
}

std::string metric_columns(const fs::path& log) {
  std::ifstream in(log);
  std::string line, out;
  while (std::getline(in, line)) {
    if (line.starts_with("#")) continue;
    // building,strategy,period_months,update_n,rmse,mase,... : keep the first six
    std::size_t pos = 0;
    for (int k = 0; k < 6 && pos != std::string::npos; ++k) pos = line.find(',', pos + 1);
    out += line.substr(0, pos) + '\n';
  }
  return out;
}

Verdict determinism(const ExperimentConfig& base, const fs::path& work) {
  std::vector<std::string> columns;
  for (int rep = 0; rep < 2; ++rep) {
    auto c = base;
    c.jobs = rep + 1;  // worker count must not matter either
    const fs::path dir = work / ("det" + std::to_string(rep));
    fs::remove_all(dir);
    const auto hash = config_hash(c);
    write_simulated(dir / "data", simulate_all(c), hash);
    check_manifest(dir / "data");
    const auto sources = read_sources(dir / "data");
    const auto targets = read_targets(dir / "data");
    const auto g = pretrain_general(sources, c);
    save_network(dir / "general_model.json", g.net, hash);
    save_scaler(dir / "scaler.json", g.scaler, hash);
    const Network proto = init_network(0, c.hidden);
    const GeneralModel loaded{load_network(dir / "general_model.json", &proto), load_scaler(dir / "scaler.json"), {}};
    const auto log = run_experiment(c, targets, loaded, c.run_seed(0));
    if (!log.failures.empty()) return {false, "run failure: " + log.failures.front()};
    write_result_log(dir / "result_log.csv", log.rows, hash);
    columns.push_back(metric_columns(dir / "result_log.csv"));
  }
  const auto rows = std::count(columns[0].begin(), columns[0].end(), '\n') - 1;
  return {columns[0] == columns[1] && rows > 0,
          strf("simulate, pretrain, run twice (jobs 1 and 2): %ld result rows, metric columns %s", static_cast<long>(rows),
              columns[0] == columns[1] ? "byte-identical" : "DIFFER")};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  std::string only;
  std::string configs = THERMADAPT_SOURCE_DIR "/configs";
  std::string full;
  std::string work = (fs::temp_directory_path() / "thermadapt_acceptance").string();
  app.add_option("--only", only, "comma-separated criterion numbers");
  app.add_option("--configs", configs, "directory holding ci_smoke.json and ci_retrofit.json");
  app.add_option("--full", full, "config for the full trend run; asserts (a)-(d)");
  app.add_option("--work", work, "scratch directory");
  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::warn);

  std::set<int> selected;
  for (std::stringstream ss(only); ss.good();) {
    std::string tok;
    std::getline(ss, tok, ',');
    if (!tok.empty()) selected.insert(std::stoi(tok));
  }

  const auto smoke = load_config(fs::path(configs) / "ci_smoke.json");
  const auto retro = load_config(fs::path(configs) / "ci_retrofit.json");
  auto tiny = smoke;
  tiny.years = 1;
  tiny.buildings = {"T1"};
  tiny.source_buildings = 2;
  tiny.pretrain.epochs = 4;

  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
      {"gradient correctness", gradients},
      {"metric oracles", metric_oracles},
      {"strategy complexity audit", complexity},
      {"GEM projection", gem_instances},
      {"SML indexing", sml_indexing},
      {"schedule statistics", schedules},
      {"qualitative trends",
       [&] { return full.empty() ? trends(smoke, false) : trends(load_config(full), true); }},
      {"drift response", [&] { return drift_response(retro); }},
      {"determinism", [&] { return determinism(tiny, work); }},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.contains(number)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !v.pass;
    std::printf("%s criterion %d (%s): %s [%.1fs]\n", v.pass ? "PASS" : "FAIL", number, criteria[i].first,
                v.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
