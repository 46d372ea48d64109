#include "thermadapt/metrics.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "thermadapt/errors.hpp"

namespace thermadapt {

namespace {

void check_pair(const Matrix& truth, const Matrix& pred, const char* what) {
  if (!truth.same_shape(pred))
    throw DimensionError(std::string(what) + ": truth " + truth.shape_string() + " vs prediction " + pred.shape_string());
  if (truth.rows() == 0 || truth.cols() == 0) throw DataError(std::string(what) + ": no windows");
}

}  // namespace

double rmse(const Matrix& truth, const Matrix& pred) {
  check_pair(truth, pred, "rmse");
  const std::size_t n = truth.rows();
  const std::size_t h = truth.cols();
  double outer = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double inner = 0.0;
    for (std::size_t j = 0; j < h; ++j) {
      const double d = truth(i, j) - pred(i, j);
      inner += d * d;
    }
    outer += inner / static_cast<double>(h);
  }
  return std::sqrt(outer / static_cast<double>(n));
}

MaseResult mase(const Matrix& truth, const Matrix& pred, std::span<const double> anchors) {
  check_pair(truth, pred, "mase");
  if (anchors.size() != truth.rows())
    throw DimensionError("mase: " + std::to_string(anchors.size()) + " anchors for " + std::to_string(truth.rows()) +
                         " windows");
  double model = 0.0;
  double naive = 0.0;
  for (std::size_t i = 0; i < truth.rows(); ++i)
    for (std::size_t j = 0; j < truth.cols(); ++j) {
      model += std::abs(truth(i, j) - pred(i, j));
      naive += std::abs(truth(i, j) - anchors[i]);
    }
  const double count = static_cast<double>(truth.size());
  model /= count;
  naive /= count;
  if (naive < 1e-9) return {std::numeric_limits<double>::quiet_NaN(), true};
  return {model / naive, false};
}

double rri(double rmse_benchmark, double rmse_model) {
  if (!(rmse_benchmark > 0.0)) throw ContractError("rri: benchmark RMSE must be > 0, got " + std::to_string(rmse_benchmark));
  return (rmse_benchmark - rmse_model) / rmse_benchmark;
}

}  // namespace thermadapt
