#pragma once

#include <span>
#include <string>
#include <vector>

#include "thermadapt/matrix.hpp"

namespace thermadapt {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Moment accumulators for one set of parameter blocks.
class AdamState {
 public:
  AdamState(AdamConfig config, std::span<const Matrix> params);

  const AdamConfig& config() const { return config_; }
  long step_count() const { return step_; }

  /// In-place bias-corrected Adam update. `names` label the blocks in diagnostics
  /// and may be empty. Throws NumericError on a non-finite gradient.
  void step(std::span<Matrix> params, std::span<const Matrix> grads, std::span<const std::string> names = {});

 private:
  AdamConfig config_;
  long step_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

}  // namespace thermadapt
