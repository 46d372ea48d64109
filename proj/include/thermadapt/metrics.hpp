#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "thermadapt/matrix.hpp"

namespace thermadapt {

/// sqrt of the window mean of the horizon-mean squared error.
double rmse(const Matrix& truth, const Matrix& pred);

struct MaseResult {
  double value = 0.0;
  bool degenerate = false;  // naive error below 1e-9; value is NaN
};

/// Mean absolute error of `pred` over that of the constant-anchor forecast.
MaseResult mase(const Matrix& truth, const Matrix& pred, std::span<const double> anchors);

/// (benchmark - model) / benchmark. Throws ContractError if benchmark <= 0.
double rri(double rmse_benchmark, double rmse_model);

}  // namespace thermadapt
