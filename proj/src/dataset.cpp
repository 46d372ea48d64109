#include "thermadapt/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "thermadapt/errors.hpp"

namespace thermadapt {

namespace {

void check_window_shape(int lookback, int horizon) {
  if (lookback < 1 || horizon < 1 || horizon > 8)
    throw ContractError("window: lookback must be >= 1 and horizon in [1, 8]");
}

bool contiguous(const FeatureFrame& f, std::size_t first, std::size_t last) {
  return f.time[last] - f.time[first] == static_cast<Minutes>(last - first) * kStepMinutes;
}

}  // namespace

FramePtr make_frame(const TimeSeries& series) {
  auto f = std::make_shared<FeatureFrame>();
  f->time = series.time;
  f->values.resize(series.size() * kFeatureCount);
  for (std::size_t i = 0; i < series.size(); ++i) {
    double* row = f->values.data() + i * kFeatureCount;
    row[0] = series.t_in[i];
    row[1] = series.t_out[i];
    row[2] = series.q_dir[i];
    row[3] = series.q_dif[i];
    row[4] = series.u_in[i];
  }
  return f;
}

std::uint32_t WindowedDataset::frame_index(const FramePtr& frame) {
  for (std::size_t i = 0; i < frames_.size(); ++i)
    if (frames_[i] == frame) return static_cast<std::uint32_t>(i);
  frames_.push_back(frame);
  return static_cast<std::uint32_t>(frames_.size() - 1);
}

void WindowedDataset::push(const FramePtr& frame, std::uint32_t anchor) {
  refs_.push_back({frame_index(frame), anchor});
}

Matrix WindowedDataset::input(std::size_t i) const {
  const Ref r = refs_.at(i);
  const FeatureFrame& f = *frames_[r.frame];
  Matrix m(static_cast<std::size_t>(lookback_), kFeatureCount);
  const std::size_t first = r.anchor + 1 - static_cast<std::size_t>(lookback_);
  std::copy(f.values.begin() + static_cast<std::ptrdiff_t>(first * kFeatureCount),
            f.values.begin() + static_cast<std::ptrdiff_t>((r.anchor + 1) * kFeatureCount), m.data());
  return m;
}

void WindowedDataset::write_input_column(std::size_t i, std::span<Matrix> steps, std::size_t col) const {
  const Ref r = refs_[i];
  const FeatureFrame& f = *frames_[r.frame];
  const std::size_t first = r.anchor + 1 - static_cast<std::size_t>(lookback_);
  for (std::size_t t = 0; t < steps.size(); ++t) {
    const double* row = f.values.data() + (first + t) * kFeatureCount;
    for (std::size_t k = 0; k < kFeatureCount; ++k) steps[t](k, col) = row[k];
  }
}

std::array<double, 8> WindowedDataset::target(std::size_t i) const {
  std::array<double, 8> out{};
  for (int j = 0; j < horizon_; ++j) out[static_cast<std::size_t>(j)] = target(i, j);
  return out;
}

double WindowedDataset::target(std::size_t i, int j) const {
  const Ref r = refs_[i];
  return frames_[r.frame]->at(r.anchor + 1 + static_cast<std::size_t>(j), kTargetFeature);
}

double WindowedDataset::anchor_value(std::size_t i) const {
  const Ref r = refs_[i];
  return frames_[r.frame]->at(r.anchor, kTargetFeature);
}

Minutes WindowedDataset::anchor_time(std::size_t i) const {
  const Ref r = refs_[i];
  return frames_[r.frame]->time[r.anchor];
}

Minutes WindowedDataset::first_input_time(std::size_t i) const {
  const Ref r = refs_[i];
  return frames_[r.frame]->time[r.anchor + 1 - static_cast<std::size_t>(lookback_)];
}

Minutes WindowedDataset::last_target_time(std::size_t i) const {
  const Ref r = refs_[i];
  return frames_[r.frame]->time[r.anchor + static_cast<std::size_t>(horizon_)];
}

Matrix WindowedDataset::targets() const {
  Matrix m(size(), static_cast<std::size_t>(horizon_));
  for (std::size_t i = 0; i < size(); ++i)
    for (int j = 0; j < horizon_; ++j) m(i, static_cast<std::size_t>(j)) = target(i, j);
  return m;
}

std::vector<double> WindowedDataset::anchors() const {
  std::vector<double> a(size());
  for (std::size_t i = 0; i < size(); ++i) a[i] = anchor_value(i);
  return a;
}

WindowedDataset WindowedDataset::subset(std::size_t begin, std::size_t end) const {
  if (begin > end || end > size()) throw ContractError("subset: range out of bounds");
  WindowedDataset out(lookback_, horizon_);
  for (std::size_t i = begin; i < end; ++i) out.push(frames_[refs_[i].frame], refs_[i].anchor);
  return out;
}

WindowedDataset WindowedDataset::select(std::span<const std::size_t> indices) const {
  WindowedDataset out(lookback_, horizon_);
  for (std::size_t i : indices) {
    if (i >= size()) throw ContractError("select: index out of bounds");
    out.push(frames_[refs_[i].frame], refs_[i].anchor);
  }
  return out;
}

void WindowedDataset::append(const WindowedDataset& other) {
  if (other.empty()) return;
  if (empty() && frames_.empty()) {
    lookback_ = other.lookback_;
    horizon_ = other.horizon_;
  }
  if (other.lookback_ != lookback_ || other.horizon_ != horizon_)
    throw DimensionError("append: window shapes differ");
  for (const Ref& r : other.refs_) push(other.frames_[r.frame], r.anchor);
}

WindowedDataset window(const FramePtr& frame, int lookback, int horizon) {
  check_window_shape(lookback, horizon);
  const std::size_t need = static_cast<std::size_t>(lookback + horizon);
  if (frame->rows() < need)
    throw DataError("window: series has " + std::to_string(frame->rows()) + " rows, at least " + std::to_string(need) +
                    " required (lookback " + std::to_string(lookback) + " + horizon " + std::to_string(horizon) + ")");
  WindowedDataset ds(lookback, horizon);
  for (std::size_t a = static_cast<std::size_t>(lookback - 1); a + static_cast<std::size_t>(horizon) < frame->rows(); ++a) {
    if (contiguous(*frame, a + 1 - static_cast<std::size_t>(lookback), a + static_cast<std::size_t>(horizon)))
      ds.push(frame, static_cast<std::uint32_t>(a));
  }
  return ds;
}

WindowedDataset window(const TimeSeries& series, int lookback, int horizon) {
  return window(make_frame(series), lookback, horizon);
}

WindowedDataset window_range(const FramePtr& frame, Minutes begin, Minutes end, int lookback, int horizon) {
  check_window_shape(lookback, horizon);
  const auto& t = frame->time;
  const auto lo = static_cast<std::size_t>(std::lower_bound(t.begin(), t.end(), begin) - t.begin());
  const auto hi = static_cast<std::size_t>(std::lower_bound(t.begin(), t.end(), end) - t.begin());
  WindowedDataset ds(lookback, horizon);
  const auto lb = static_cast<std::size_t>(lookback);
  const auto h = static_cast<std::size_t>(horizon);
  for (std::size_t a = lo + lb - 1; a + h < hi; ++a)
    if (contiguous(*frame, a + 1 - lb, a + h)) ds.push(frame, static_cast<std::uint32_t>(a));
  return ds;
}

WindowedDataset concat(std::span<const WindowedDataset> parts) {
  WindowedDataset out;
  for (const auto& p : parts) out.append(p);
  return out;
}

TrainValSplit split_train_val(const WindowedDataset& ds) {
  if (ds.size() < 10)
    throw DataError("split_train_val: " + std::to_string(ds.size()) + " windows, at least 10 required");
  const auto n_train = static_cast<std::size_t>(std::floor(0.7 * static_cast<double>(ds.size())));
  return {ds.subset(0, n_train), ds.subset(n_train, ds.size())};
}

namespace {

template <typename RowVisitor>
Scaler fit_over_rows(RowVisitor&& visit_rows) {
  std::array<double, kFeatureCount> sum{};
  std::size_t count = 0;
  visit_rows([&](const double* row) {
    for (std::size_t k = 0; k < kFeatureCount; ++k) sum[k] += row[k];
    ++count;
  });
  if (count == 0) throw DataError("fit_scaler: no rows");
  Scaler s;
  for (std::size_t k = 0; k < kFeatureCount; ++k) s.mean[k] = sum[k] / static_cast<double>(count);
  std::array<double, kFeatureCount> ss{};
  visit_rows([&](const double* row) {
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
      const double d = row[k] - s.mean[k];
      ss[k] += d * d;
    }
  });
  static constexpr const char* kNames[kFeatureCount] = {"t_in", "t_out", "q_dir", "q_dif", "u_in"};
  for (std::size_t k = 0; k < kFeatureCount; ++k) {
    s.std[k] = std::sqrt(ss[k] / static_cast<double>(count));
    if (!(s.std[k] > 1e-12)) throw DataError(std::string("fit_scaler: degenerate feature ") + kNames[k] + " (zero variance)");
  }
  return s;
}

}  // namespace

Scaler fit_scaler(const WindowedDataset& train) {
  if (train.empty()) throw DataError("fit_scaler: empty dataset");
  // Distinct covered rows per frame.
  std::vector<std::vector<bool>> covered(train.frames().size());
  for (std::size_t f = 0; f < covered.size(); ++f) covered[f].assign(train.frames()[f]->rows(), false);
  const auto lb = static_cast<std::size_t>(train.lookback());
  const auto h = static_cast<std::size_t>(train.horizon());
  for (const auto& r : train.refs())
    for (std::size_t row = r.anchor + 1 - lb; row <= r.anchor + h; ++row) covered[r.frame][row] = true;
  return fit_over_rows([&](auto&& fn) {
    for (std::size_t f = 0; f < covered.size(); ++f) {
      const auto& frame = *train.frames()[f];
      for (std::size_t row = 0; row < frame.rows(); ++row)
        if (covered[f][row]) fn(frame.values.data() + row * kFeatureCount);
    }
  });
}

Scaler fit_scaler(std::span<const FramePtr> frames) {
  return fit_over_rows([&](auto&& fn) {
    for (const auto& f : frames)
      for (std::size_t row = 0; row < f->rows(); ++row) fn(f->values.data() + row * kFeatureCount);
  });
}

FramePtr apply_scaler(const FramePtr& frame, const Scaler& scaler) {
  auto out = std::make_shared<FeatureFrame>(*frame);
  for (std::size_t row = 0; row < out->rows(); ++row)
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
      double& v = out->values[row * kFeatureCount + k];
      v = scaler.scale(k, v);
    }
  return out;
}

FramePtr invert_scaler(const FramePtr& frame, const Scaler& scaler) {
  auto out = std::make_shared<FeatureFrame>(*frame);
  for (std::size_t row = 0; row < out->rows(); ++row)
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
      double& v = out->values[row * kFeatureCount + k];
      v = scaler.unscale(k, v);
    }
  return out;
}

WindowedDataset apply_scaler(const WindowedDataset& ds, const Scaler& scaler) {
  std::vector<FramePtr> scaled;
  scaled.reserve(ds.frames().size());
  for (const auto& f : ds.frames()) scaled.push_back(apply_scaler(f, scaler));
  WindowedDataset out(ds.lookback(), ds.horizon());
  for (const auto& r : ds.refs()) out.push(scaled[r.frame], r.anchor);
  return out;
}

Matrix naive_forecast(const WindowedDataset& ds) {
  Matrix m(ds.size(), static_cast<std::size_t>(ds.horizon()));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const double a = ds.anchor_value(i);
    for (std::size_t j = 0; j < m.cols(); ++j) m(i, j) = a;
  }
  return m;
}

}  // namespace thermadapt
