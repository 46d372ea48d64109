#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "thermadapt/dataset.hpp"
#include "thermadapt/errors.hpp"

using namespace thermadapt;

namespace {

TimeSeries series_of(std::size_t n, double (*f)(std::size_t), Minutes start = default_series_start()) {
  TimeSeries s;
  std::mt19937_64 rng(n);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    s.time.push_back(start + static_cast<Minutes>(i) * kStepMinutes);
    s.t_in.push_back(f(i));
    s.t_out.push_back(5.0 + 10.0 * u(rng));
    s.q_dir.push_back(100.0 * u(rng));
    s.q_dif.push_back(50.0 * u(rng));
    s.u_in.push_back(u(rng));
  }
  return s;
}

double ramp(std::size_t i) { return 18.0 + 0.01 * static_cast<double>(i); }
double flat(std::size_t) { return 21.5; }

}  // namespace

TEST_CASE("window counts") {
  CHECK(window(series_of(100, ramp), 16, 4).size() == 81);
  CHECK(window(series_of(20, ramp), 16, 4).size() == 1);
  CHECK_THROWS_AS(window(series_of(19, ramp), 16, 4), DataError);

  // a gap removes every window spanning it
  auto s = series_of(100, ramp);
  for (std::size_t i = 50; i < s.size(); ++i) s.time[i] += 60;
  CHECK(window(s, 16, 4).size() == (50 - 20 + 1) + (50 - 20 + 1));
}

TEST_CASE("window contents") {
  const auto c = window(series_of(40, flat), 16, 4);
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(c.anchor_value(i) == 21.5);
    for (int j = 0; j < 4; ++j) CHECK(c.target(i, j) == 21.5);
  }
  const auto naive = naive_forecast(c);
  CHECK(naive == c.targets());

  const auto r = window(series_of(60, ramp), 16, 4);
  const auto nr = naive_forecast(r);
  const auto tr = r.targets();
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = 0; j < 4; ++j) CHECK(tr(i, j) - nr(i, j) == doctest::Approx(0.01 * (j + 1)).epsilon(1e-9));

  const Matrix in = r.input(3);
  CHECK(in.rows() == 16);
  CHECK(in.cols() == kFeatureCount);
  CHECK(in(15, kTargetFeature) == r.anchor_value(3));
  CHECK(r.last_target_time(3) == r.anchor_time(3) + 4 * kStepMinutes);
}

TEST_CASE("chronological split") {
  const auto ds = window(series_of(119, ramp), 16, 4);
  REQUIRE(ds.size() == 100);
  const auto s = split_train_val(ds);
  CHECK(s.train.size() == 70);
  CHECK(s.val.size() == 30);
  Minutes max_train = 0;
  for (std::size_t i = 0; i < s.train.size(); ++i) max_train = std::max(max_train, s.train.anchor_time(i));
  for (std::size_t i = 0; i < s.val.size(); ++i) CHECK(max_train < s.val.anchor_time(i));

  const auto ten = split_train_val(ds.subset(0, 10));
  CHECK(ten.train.size() == 7);
  CHECK(ten.val.size() == 3);
  CHECK_THROWS_AS(split_train_val(ds.subset(0, 9)), DataError);
}

TEST_CASE("scaler") {
  const auto frame = make_frame(series_of(500, ramp));
  const FramePtr frames[] = {frame};
  const Scaler sc = fit_scaler(frames);
  const auto scaled = apply_scaler(frame, sc);
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    double m = 0.0, v = 0.0;
    const std::size_t n = scaled->rows();
    for (std::size_t r = 0; r < n; ++r) m += scaled->at(r, f);
    m /= n;
    for (std::size_t r = 0; r < n; ++r) v += (scaled->at(r, f) - m) * (scaled->at(r, f) - m);
    CHECK(std::abs(m) < 1e-9);
    CHECK(std::abs(std::sqrt(v / n) - 1.0) < 1e-9);
  }
  const auto back = invert_scaler(scaled, sc);
  for (std::size_t i = 0; i < frame->values.size(); ++i)
    CHECK(std::abs(back->values[i] - frame->values[i]) <= 1e-12 * std::max(1.0, std::abs(frame->values[i])));

  // windowing and scaling commute
  const auto a = apply_scaler(window(frame, 16, 4), sc);
  const auto b = window(scaled, 16, 4);
  CHECK(a.targets() == b.targets());
  CHECK(a.input(7) == b.input(7));

  // a frozen scaler does not centre other data
  const auto other = apply_scaler(make_frame(series_of(500, flat)), sc);
  double m = 0.0;
  for (std::size_t r = 0; r < other->rows(); ++r) m += other->at(r, kTargetFeature);
  CHECK(std::abs(m / other->rows()) > 0.1);

  const FramePtr degenerate[] = {make_frame(series_of(100, flat))};
  CHECK_THROWS_WITH_AS(fit_scaler(degenerate), doctest::Contains("t_in"), DataError);
}

TEST_CASE("window_range keeps windows inside the period") {
  const auto frame = make_frame(series_of(4 * 96, ramp));
  const Minutes start = default_series_start();
  const auto ds = window_range(frame, start + 24 * 60, start + 2 * 24 * 60, 16, 4);
  CHECK(ds.size() == 96 - 20 + 1);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(ds.first_input_time(i) >= start + 24 * 60);
    CHECK(ds.last_target_time(i) < start + 2 * 24 * 60);
  }
}
