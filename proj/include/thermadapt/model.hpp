#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "thermadapt/adam.hpp"
#include "thermadapt/dataset.hpp"
#include "thermadapt/matrix.hpp"
#include "thermadapt/tape.hpp"

namespace thermadapt {

inline constexpr int kLstmLayers = 3;
inline constexpr int kDefaultHidden = 32;

/// Three stacked LSTM layers and a linear head. Parameter blocks, in order:
/// per layer `W` (4H x (in+H), gate rows i, f, g, o) and `b` (4H x 1), then
/// `head.W` (horizon x H) and `head.b` (horizon x 1).
struct Network {
  int hidden = kDefaultHidden;
  int horizon = kDefaultHorizon;
  std::vector<std::string> names;
  std::vector<Matrix> params;

  std::size_t parameter_count() const;
  friend bool operator==(const Network&, const Network&) = default;
};

Network init_network(std::uint64_t seed, int hidden = kDefaultHidden, int horizon = kDefaultHorizon);

/// Predictions in scaled space for one `lookback x 5` window.
std::vector<double> forward(const Network& net, const Matrix& window);
/// `n x horizon` predictions (scaled space) for every window of `ds`.
Matrix predict(const Network& net, const WindowedDataset& ds);
/// Mean squared error over windows and horizon, scaled space.
double mse(const Network& net, const WindowedDataset& ds);

/// Graph handles of one batch recorded on a tape.
struct BatchGraph {
  std::vector<NodeId> params;
  NodeId output = 0;
  NodeId loss = 0;
};

/// Records the unrolled network for windows `indices` of `ds` and its MSE loss.
BatchGraph record_batch(Tape& tape, const Network& net, const WindowedDataset& ds,
                        std::span<const std::size_t> indices);

struct LossAndGrad {
  double loss = 0.0;
  std::vector<Matrix> grads;
};

LossAndGrad loss_and_gradients(const Network& net, const WindowedDataset& ds, std::span<const std::size_t> indices);

/// Adds a term to the batch loss. Receives the current parameters, must add
/// its gradient into `grads` and return its value.
using ExtraLossHook = std::function<double(std::span<const Matrix> params, std::span<Matrix> grads)>;
/// Rewrites the batch gradient before the optimizer step.
using GradientHook = std::function<void(const Network& current, std::vector<Matrix>& grads)>;

struct TrainOptions {
  int max_epochs = 60;
  int batch_size = 64;
  AdamConfig adam{};
  std::uint64_t seed = 0;
  /// Caps the mini-batches drawn per epoch; 0 uses the whole training set.
  int max_batches_per_epoch = 0;
  /// Stops after this many epochs without a validation improvement; 0 disables.
  int patience = 0;
  /// Validates on this many evenly spaced windows; 0 uses the whole set.
  int max_val_windows = 0;
  ExtraLossHook extra_loss;
  GradientHook gradient_hook;
};

struct TrainReport {
  double best_val_loss = 0.0;
  int best_epoch = 0;
  int epochs_run = 0;
  double seconds = 0.0;
  std::size_t n_train = 0;
  std::vector<double> val_history;
};

struct TrainResult {
  Network net;
  TrainReport report;
};

/// Adam mini-batch training with best-model selection on validation MSE.
TrainResult train(const Network& start, const WindowedDataset& train_ds, const WindowedDataset& val_ds,
                  const TrainOptions& opts);

void save_network(const std::filesystem::path& path, const Network& net, const std::string& config_hash = "");
/// Throws IoError on malformed files; DimensionError if `expected` is given and
/// any block shape differs.
Network load_network(const std::filesystem::path& path, const Network* expected = nullptr);

void save_scaler(const std::filesystem::path& path, const Scaler& scaler, const std::string& config_hash = "");
Scaler load_scaler(const std::filesystem::path& path);

}  // namespace thermadapt
