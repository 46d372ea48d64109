#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "thermadapt/calendar.hpp"
#include "thermadapt/matrix.hpp"
#include "thermadapt/timeseries.hpp"

namespace thermadapt {

inline constexpr std::size_t kFeatureCount = 5;  // T_in, T_out, Q_dir, Q_dif, u_in
inline constexpr std::size_t kTargetFeature = 0;
inline constexpr int kDefaultHorizon = 4;
inline constexpr int kDefaultLookback = 16;

/// Immutable feature table of one series: `rows x 5`, row-major.
struct FeatureFrame {
  std::vector<Minutes> time;
  std::vector<double> values;

  std::size_t rows() const { return time.size(); }
  double at(std::size_t row, std::size_t feature) const { return values[row * kFeatureCount + feature]; }
};

using FramePtr = std::shared_ptr<const FeatureFrame>;

FramePtr make_frame(const TimeSeries& series);

/// Supervised windows over one or more frames. A window is identified by its
/// anchor row t: inputs are rows t-lookback+1..t, targets are T_in at
/// t+1..t+horizon. Windows are stored in chronological order of insertion.
class WindowedDataset {
 public:
  struct Ref {
    std::uint32_t frame;
    std::uint32_t anchor;
    friend bool operator==(const Ref&, const Ref&) = default;
  };

  WindowedDataset() = default;
  WindowedDataset(int lookback, int horizon) : lookback_(lookback), horizon_(horizon) {}

  int lookback() const { return lookback_; }
  int horizon() const { return horizon_; }
  std::size_t size() const { return refs_.size(); }
  bool empty() const { return refs_.empty(); }
  const std::vector<Ref>& refs() const { return refs_; }
  const std::vector<FramePtr>& frames() const { return frames_; }

  /// Input window `lookback x 5`.
  Matrix input(std::size_t i) const;
  /// Fills column `col` of each per-step matrix (`5 x batch`) with window i.
  void write_input_column(std::size_t i, std::span<Matrix> steps, std::size_t col) const;
  std::array<double, 8> target(std::size_t i) const;
  double target(std::size_t i, int j) const;
  double anchor_value(std::size_t i) const;
  Minutes anchor_time(std::size_t i) const;
  Minutes first_input_time(std::size_t i) const;
  Minutes last_target_time(std::size_t i) const;

  /// `n x horizon` targets.
  Matrix targets() const;
  std::vector<double> anchors() const;

  WindowedDataset subset(std::size_t begin, std::size_t end) const;
  WindowedDataset select(std::span<const std::size_t> indices) const;
  void append(const WindowedDataset& other);

  /// Used by window(); appends one window reference.
  void push(const FramePtr& frame, std::uint32_t anchor);

 private:
  std::uint32_t frame_index(const FramePtr& frame);

  int lookback_ = kDefaultLookback;
  int horizon_ = kDefaultHorizon;
  std::vector<FramePtr> frames_;
  std::vector<Ref> refs_;
};

/// All stride-1 windows of the frame that do not span a timestamp gap.
/// Throws DataError when the frame is shorter than lookback + horizon.
WindowedDataset window(const FramePtr& frame, int lookback = kDefaultLookback, int horizon = kDefaultHorizon);
WindowedDataset window(const TimeSeries& series, int lookback = kDefaultLookback, int horizon = kDefaultHorizon);
/// Windows whose inputs and targets all lie in [begin, end).
WindowedDataset window_range(const FramePtr& frame, Minutes begin, Minutes end, int lookback = kDefaultLookback,
                             int horizon = kDefaultHorizon);

/// Concatenates datasets in order.
WindowedDataset concat(std::span<const WindowedDataset> parts);

struct TrainValSplit {
  WindowedDataset train;
  WindowedDataset val;
};

/// Chronological split: first floor(0.7 N) windows train, the rest validation.
/// Throws DataError when N < 10.
TrainValSplit split_train_val(const WindowedDataset& ds);

/// Per-feature standardization.
struct Scaler {
  std::array<double, kFeatureCount> mean{};
  std::array<double, kFeatureCount> std{};

  double scale(std::size_t feature, double v) const { return (v - mean[feature]) / std[feature]; }
  double unscale(std::size_t feature, double v) const { return v * std[feature] + mean[feature]; }
  double unscale_target(double v) const { return unscale(kTargetFeature, v); }

  friend bool operator==(const Scaler&, const Scaler&) = default;
};

/// Mean and population std over every distinct row covered by the windows.
/// Throws DataError on an empty set or a zero-variance feature.
Scaler fit_scaler(const WindowedDataset& train);
Scaler fit_scaler(std::span<const FramePtr> frames);

FramePtr apply_scaler(const FramePtr& frame, const Scaler& scaler);
FramePtr invert_scaler(const FramePtr& frame, const Scaler& scaler);
/// Same windows over scaled copies of the frames.
WindowedDataset apply_scaler(const WindowedDataset& ds, const Scaler& scaler);

/// Last observed T_in repeated over the horizon, `n x horizon`.
Matrix naive_forecast(const WindowedDataset& ds);

}  // namespace thermadapt
