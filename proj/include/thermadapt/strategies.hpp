#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "thermadapt/dataset.hpp"
#include "thermadapt/model.hpp"

namespace thermadapt {

/// Everything a strategy sees at update n. Datasets are already scaled.
struct UpdateContext {
  int n = 1;
  int period_months = 1;
  const WindowedDataset* x_n = nullptr;
  const Network* general = nullptr;
  const Network* previous = nullptr;  // f_{n-1}; null at n = 1
  /// A drift event happened inside x_n (simulation ground truth).
  bool event_flag = false;
  /// Training seed; shared by all strategies for the same (building, n).
  std::uint64_t seed = 0;
};

struct UpdateOutcome {
  Network net;
  TrainReport report;
  bool trained = false;
  int pool_periods = 0;
  std::size_t pool_windows = 0;
};

struct GemSolverOptions {
  double tolerance = 1e-6;
  int max_iterations = 1000;
};

inline TrainOptions scratch_defaults() {
  TrainOptions o;
  o.max_epochs = 150;
  return o;
}

struct StrategyConfig {
  TrainOptions finetune = TrainOptions();
  TrainOptions scratch = scratch_defaults();
  int hidden = kDefaultHidden;
  double ewc_lambda = 100.0;
  std::size_t ewc_capacity = 1000;
  std::size_t ewc_refresh = 250;
  std::size_t gem_samples = 250;
  /// Samples drawn from each memory per gradient step; 0 uses the whole memory.
  std::size_t gem_memory_batch = 0;
  GemSolverOptions gem_solver{};
};

class Strategy {
 public:
  virtual ~Strategy() = default;
  virtual std::string_view name() const = 0;
  virtual UpdateOutcome update(const UpdateContext& ctx) = 0;
  /// Training examples retained between updates.
  virtual std::size_t stored_examples() const = 0;
};

const std::vector<std::string>& strategy_names();
/// Throws ConfigError listing the valid names on an unknown name.
std::unique_ptr<Strategy> make_strategy(std::string_view name, const StrategyConfig& config);

/// Fine-tunes `base` on the chronological 70/30 split of `pool`.
TrainResult fine_tune(const Network& base, const WindowedDataset& pool, const TrainOptions& opts, std::uint64_t seed);

/// Mean over buffer examples of the squared per-example MSE gradient.
std::vector<Matrix> estimate_fisher(const Network& net, const WindowedDataset& buffer);

/// (lambda / 2) * sum F (theta - anchor)^2. Adds its gradient into `grads` when given.
double ewc_penalty(std::span<const Matrix> params, std::span<const Matrix> anchor, std::span<const Matrix> fisher,
                   double lambda, std::span<Matrix> grads = {});

struct GemProjection {
  std::vector<double> g;
  bool projected = false;
  bool converged = true;
  int iterations = 0;
};

/// Closest vector to `g` with a non-negative inner product against every
/// memory gradient, via the dual QP solved by a Lawson-Hanson active set.
/// Falls back to `g` (converged = false) if the solver does not converge.
GemProjection gem_project(std::span<const double> g, std::span<const std::vector<double>> memories,
                          const GemSolverOptions& options = {});

/// Period indices of the SML training pool at update n, ascending:
/// {n-a-1, n-a, n-a+1, n} with a = 12/|x| when n-a-1 >= 1, else {n}.
/// Throws ConfigError if |x| is not 1, 2 or 3.
std::vector<int> sml_pool_indices(int n, int period_months);

}  // namespace thermadapt
