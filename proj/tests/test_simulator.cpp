#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>

#include "thermadapt/building.hpp"
#include "thermadapt/calendar.hpp"
#include "thermadapt/drift.hpp"
#include "thermadapt/errors.hpp"
#include "thermadapt/occupancy.hpp"
#include "thermadapt/weather.hpp"

using namespace thermadapt;

namespace {

// Asymptotic Kolmogorov distribution with the Stephens small-sample correction.
double ks_p_value(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(p, 0.0, 1.0);
}

double mean_between(const TimeSeries& s, const std::vector<double>& col, Minutes a, Minutes b) {
  double sum = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s.time[i] >= a && s.time[i] < b) {
      sum += col[i];
      ++n;
    }
  return sum / n;
}

}  // namespace

TEST_CASE("calendar") {
  CHECK(to_iso(default_series_start()) == "2015-01-01T00:00:00");
  CHECK(add_months(parse_iso("2015-01-31"), 1) == parse_iso("2015-02-28"));
  CHECK(day_of_week(parse_iso("2015-01-01")) == 3);  // Thursday
  CHECK(parse_iso("2017-04-01") - parse_iso("2015-01-01") == (365 + 366 + 31 + 28 + 31) * 24 * 60);
}

TEST_CASE("occupancy draws") {
  const auto a = generate_occupancy(42);
  CHECK(a == generate_occupancy(42));
  CHECK_FALSE(a == generate_occupancy(43));

  const std::size_t n = 10000;
  std::vector<double> sp;
  int no_setback = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto o = generate_occupancy(1000 + i);
    sp.push_back(o.t_sp_day);
    no_setback += o.dt_night == 0.0;
    CHECK(o.n_occupants >= 1);
    CHECK(o.n_occupants <= 5);
    if (o.dt_night != 0.0) {
      CHECK(o.dt_night >= 0.5);
      CHECK(o.dt_night <= 4.0);
    }
  }
  CHECK(std::abs(no_setback / double(n) - 0.30) <= 0.01);

  std::sort(sp.begin(), sp.end());
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = (sp[i] - 20.0) / 4.0;
    d = std::max({d, (i + 1.0) / n - f, f - double(i) / n});
  }
  CHECK(ks_p_value(d, n) > 0.01);
}

TEST_CASE("synthetic weather") {
  const auto w = synth_weather(WeatherId::munich, 5, 9);
  CHECK(w.size() == static_cast<std::size_t>((parse_iso("2020-01-01") - parse_iso("2015-01-01")) / kStepMinutes));
  for (std::size_t i = 0; i < w.size(); i += kStepsPerDay) CHECK(w.q_dir[i] == 0.0);
  double jan = 0.0, jul = 0.0;
  int nj = 0, nl = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const int m = to_civil(w.time[i]).month;
    if (m == 1) jan += w.t_out[i], ++nj;
    if (m == 7) jul += w.t_out[i], ++nl;
  }
  CHECK(jan / nj < jul / nl);
  const auto again = synth_weather(WeatherId::munich, 5, 9);
  CHECK(again.t_out == w.t_out);
  CHECK(again.q_dir == w.q_dir);
  CHECK(again.q_dif == w.q_dif);
}

TEST_CASE("heat source sizing") {
  auto occ = generate_occupancy(1, 21.0, 0.0);
  // a_ground 100: side 10 m, gross wall 208 m², window 33.28 m², roof 100 m², volume 520 m³
  // UA 202.68 W/K, ventilation 69.68 W/K, (UA + H) * (21 + 12)
  const auto ref = make_building(0.55, 150.0, 0.16, 100.0, WeatherId::munich);
  CHECK(size_heat_source(ref, occ) == doctest::Approx(8987.88).epsilon(1e-12));

  auto doubled = ref;
  doubled.u_wall *= 2;
  doubled.u_win *= 2;
  doubled.u_roof *= 2;
  CHECK(size_heat_source(doubled, occ) > size_heat_source(ref, occ));
  CHECK(transmission_ua(doubled) == doctest::Approx(2 * transmission_ua(ref)));

  const auto lo = make_building(0.25, 150.0, 0.16, 100.0, WeatherId::munich);
  const auto hi = make_building(1.15, 150.0, 0.16, 100.0, WeatherId::munich);
  CHECK(size_heat_source(hi, occ) > size_heat_source(lo, occ));
  CHECK_THROWS_AS(make_building(0.3, 150.0, 0.16, 100.0, WeatherId::munich), ConfigError);
}

TEST_CASE("free cooling is monotone") {
  auto p = make_building(0.85, 150.0, 0.16, 100.0, WeatherId::munich);
  p.q_nominal = size_heat_source(p, generate_occupancy(2));
  const auto occ = generate_occupancy(2);
  auto w = synth_weather(WeatherId::munich, 1, 4);
  std::fill(w.t_out.begin(), w.t_out.end(), 10.0);
  std::fill(w.q_dir.begin(), w.q_dir.end(), 0.0);
  std::fill(w.q_dif.begin(), w.q_dif.end(), 0.0);
  SimulationOptions off{false, false, false, false};
  const auto r = simulate(p, occ, w, w.time.front(), w.time.front() + 7 * 24 * 60, {20.0, 20.0}, off);
  for (std::size_t i = 1; i < r.series.size(); ++i) {
    CHECK(r.series.t_in[i] <= r.series.t_in[i - 1]);
    CHECK(r.series.t_in[i] > 10.0);
  }
  CHECK(r.series.t_in.back() < 12.0);
  CHECK(r.heating_energy_kwh == 0.0);
}

TEST_CASE("winter setpoint tracking") {
  // constant-setpoint reference buildings: T2, T3, T7
  struct Case {
    double u, c, f, a, sp;
    WeatherId w;
  };
  for (const Case& k : {Case{0.25, 280, 0.19, 100, 21.0, WeatherId::amsterdam},
                        Case{0.55, 150, 0.16, 70, 23.0, WeatherId::amsterdam},
                        Case{1.15, 280, 0.16, 70, 23.0, WeatherId::bratislava}}) {
    auto p = make_building(k.u, k.c, k.f, k.a, k.w);
    const auto occ = generate_occupancy(5, k.sp, 0.0);
    p.q_nominal = size_heat_source(p, occ);
    const auto w = synth_weather(k.w, 1, 8);
    const Minutes t0 = parse_iso("2015-01-10"), t1 = parse_iso("2015-01-17");
    const auto r = simulate(p, occ, w, t0, t1, spin_up_state(p, occ, w, w.time.front()));
    double sum = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < r.series.size(); ++i) {
      const double h = hour_of_day(r.series.time[i]);
      if (h >= 8.0 && h < 20.0) sum += r.series.t_in[i], ++n;
    }
    CHECK(std::abs(sum / n - k.sp) <= 0.5);
  }
}

TEST_CASE("simulation is deterministic") {
  auto p = make_building(0.55, 40.0, 0.19, 70.0, WeatherId::bratislava);
  const auto occ = generate_occupancy(3);
  p.q_nominal = size_heat_source(p, occ);
  const auto w = synth_weather(WeatherId::bratislava, 1, 3);
  const auto a = simulate(p, occ, w, w.time.front(), w.time.front() + 30 * 24 * 60, {});
  const auto b = simulate(p, occ, w, w.time.front(), w.time.front() + 30 * 24 * 60, {});
  CHECK(a.series.t_in == b.series.t_in);
  CHECK(a.series.u_in == b.series.u_in);
  for (double u : a.series.u_in) {
    CHECK(u >= 0.0);
    CHECK(u <= 1.0);
  }
}

TEST_CASE("retrofit") {
  const auto occ = generate_occupancy(6);
  auto p = make_building(1.15, 150.0, 0.19, 100.0, WeatherId::munich);
  p.q_nominal = size_heat_source(p, occ);
  const auto r = apply_retrofit(p, occ);
  CHECK(r.u_wall == 0.11);
  CHECK(r.u_roof == 0.11);
  CHECK(r.u_win == 0.7);
  CHECK(r.f_win == p.f_win);
  CHECK(r.a_ground == p.a_ground);
  CHECK(r.q_nominal < p.q_nominal);
  CHECK_THROWS_AS(apply_retrofit(r, occ), ContractError);

  const auto w = synth_weather(WeatherId::munich, 1, 12);
  const Minutes t0 = w.time.front(), t1 = w.time.back() + kStepMinutes;
  const auto before = simulate(p, occ, w, t0, t1, spin_up_state(p, occ, w, t0));
  const auto after = simulate(r, occ, w, t0, t1, spin_up_state(r, occ, w, t0));
  CHECK(after.heating_energy_kwh < before.heating_energy_kwh);
}

TEST_CASE("drift schedule statistics") {
  const int n = 10000;
  int retro = 0;
  std::array<int, 4> occ_counts{};
  for (int i = 0; i < n; ++i) {
    const auto s = generate_drift_schedule(50000 + i, 7);
    s.validate();
    retro += s.retrofit_count();
    ++occ_counts[s.occupancy_change_count()];
    std::vector<Minutes> occ;
    for (const auto& e : s.events)
      if (e.kind == DriftKind::occ) occ.push_back(e.time);
    for (std::size_t k = 1; k < occ.size(); ++k) CHECK(occ[k] - occ[k - 1] >= kOneMonth);
    CHECK(s.events.back().kind == DriftKind::end);
  }
  CHECK(std::abs(retro / double(n) - kRetrofitProbability) <= 0.01);
  for (int k = 0; k < 4; ++k) CHECK(std::abs(occ_counts[k] / double(n) - kOccupancyChangeWeights[k]) <= 0.01);
}

TEST_CASE("schedule json round trip") {
  const auto s = generate_drift_schedule(77, 7);
  const auto path = std::filesystem::temp_directory_path() / "thermadapt_schedule_rt.json";
  write_schedule_json(path, s);
  CHECK(read_schedule_json(path) == s);
  std::filesystem::remove(path);
}

TEST_CASE("target generation") {
  const auto occ = generate_occupancy(8, 22.0, 1.0);
  const auto p = make_building(0.85, 150.0, 0.16, 70.0, WeatherId::bratislava);
  const auto w = synth_weather(WeatherId::bratislava, 5, 2);
  const Minutes start = w.time.front();

  SUBCASE("end-only schedule equals one plain simulation") {
    const auto short_w = synth_weather(WeatherId::bratislava, 1, 2);
    const auto ts = generate_target_timeseries(p, occ, short_w, no_drift_schedule(start, 1), 0);
    auto sized = p;
    sized.q_nominal = size_heat_source(p, occ);
    const auto plain = simulate(sized, occ, short_w, start, add_months(start, 12),
                                spin_up_state(sized, occ, short_w, start));
    CHECK(ts.series.t_in == plain.series.t_in);
    CHECK(ts.series.u_in == plain.series.u_in);
  }

  SUBCASE("fixed retrofit on 1 April of year 3") {
    const auto sched = fixed_event_schedule(DriftKind::retro, start, 5);
    CHECK(sched.events.front().time == parse_iso("2017-04-01"));
    const auto ts = generate_target_timeseries(p, occ, w, sched, 1);
    CHECK(ts.series.size() == static_cast<std::size_t>((parse_iso("2020-01-01") - start) / kStepMinutes));
    CHECK(ts.series.size() == 175296);
    CHECK(ts.final_params.retrofitted);
    // month index of the event: 27 months after the start, i.e. period 28 of 60
    CHECK(add_months(start, 27) == parse_iso("2017-04-01"));

    const double before = mean_between(ts.series, ts.series.u_in, parse_iso("2016-01-01"), parse_iso("2016-03-01"));
    const double after = mean_between(ts.series, ts.series.u_in, parse_iso("2018-01-01"), parse_iso("2018-03-01"));
    CHECK(after < before);
  }
}
