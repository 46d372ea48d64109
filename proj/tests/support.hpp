#pragma once

#include <cmath>
#include <random>

#include "thermadapt/dataset.hpp"

namespace thermadapt::testing {

// Smooth daily cycle with noise; indoor temperature lags outdoor and control.
inline TimeSeries synthetic_series(std::size_t n, std::uint64_t seed, Minutes start = default_series_start()) {
  TimeSeries s;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 0.05);
  double t_in = 21.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double day = 2.0 * M_PI * static_cast<double>(i % 96) / 96.0;
    const double t_out = 5.0 + 4.0 * std::sin(day) + nd(rng);
    const double u = std::clamp(0.5 + 0.3 * std::cos(day) + nd(rng), 0.0, 1.0);
    t_in += 0.05 * (t_out - t_in) + 0.8 * u - 0.35 + nd(rng) * 0.2;
    s.time.push_back(start + static_cast<Minutes>(i) * kStepMinutes);
    s.t_in.push_back(t_in);
    s.t_out.push_back(t_out);
    s.q_dir.push_back(std::max(0.0, 300.0 * std::sin(day - 1.0)));
    s.q_dif.push_back(std::max(0.0, 80.0 * std::sin(day - 1.0)));
    s.u_in.push_back(u);
  }
  return s;
}

// Scaled windows of a synthetic series.
inline WindowedDataset synthetic_windows(std::size_t n, std::uint64_t seed, int lookback = 16, int horizon = 4) {
  const auto frame = make_frame(synthetic_series(n + static_cast<std::size_t>(lookback + horizon) - 1, seed));
  const FramePtr frames[] = {frame};
  return window(apply_scaler(frame, fit_scaler(frames)), lookback, horizon);
}

}  // namespace thermadapt::testing
