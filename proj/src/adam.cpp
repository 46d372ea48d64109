#include "thermadapt/adam.hpp"

#include <cmath>

#include "thermadapt/errors.hpp"

namespace thermadapt {

AdamState::AdamState(AdamConfig config, std::span<const Matrix> params) : config_(config) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const auto& p : params) {
    m_.emplace_back(p.rows(), p.cols());
    v_.emplace_back(p.rows(), p.cols());
  }
}

void AdamState::step(std::span<Matrix> params, std::span<const Matrix> grads, std::span<const std::string> names) {
  if (params.size() != m_.size() || grads.size() != m_.size())
    throw DimensionError("adam: expected " + std::to_string(m_.size()) + " parameter blocks, got " +
                         std::to_string(params.size()) + " params / " + std::to_string(grads.size()) + " grads");
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!params[k].same_shape(m_[k]) || !grads[k].same_shape(m_[k]))
      throw DimensionError("adam: block " + std::to_string(k) + " shape " + params[k].shape_string() + " / grad " +
                           grads[k].shape_string() + ", state " + m_[k].shape_string());
    if (!grads[k].all_finite()) {
      const std::string label = k < names.size() ? names[k] : "#" + std::to_string(k);
      throw NumericError("adam: non-finite gradient in parameter block " + label + " at step " +
                         std::to_string(step_ + 1));
    }
  }

  ++step_;
  const auto& c = config_;
  const double bias1 = 1.0 - std::pow(c.beta1, static_cast<double>(step_));
  const double bias2 = 1.0 - std::pow(c.beta2, static_cast<double>(step_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    double* p = params[k].data();
    const double* g = grads[k].data();
    double* m = m_[k].data();
    double* v = v_[k].data();
    for (std::size_t i = 0, n = params[k].size(); i < n; ++i) {
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      p[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

}  // namespace thermadapt
