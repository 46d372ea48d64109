#include "thermadapt/matrix.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <malloc.h>

#include "thermadapt/errors.hpp"

namespace thermadapt {

namespace {

// Training churns through large tape buffers; keep glibc from returning each
// one to the kernel with munmap.
const bool kHeapTuned = [] {
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  return true;
}();

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

ConstMap view(const Matrix& m) {
  return ConstMap(m.data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
}
MutMap view(Matrix& m) {
  return MutMap(m.data(), static_cast<Eigen::Index>(m.rows()), static_cast<Eigen::Index>(m.cols()));
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(data.begin(), data.end()) {
  if (data_.size() != rows_ * cols_)
    throw DimensionError("matrix data length " + std::to_string(data_.size()) + " does not match shape " +
                         shape_string());
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("ragged matrix literal");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::column(std::span<const double> values) {
  return Matrix(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

std::string Matrix::shape_string() const { return std::to_string(rows_) + "x" + std::to_string(cols_); }

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) throw DimensionError("matmul: " + a.shape_string() + " * " + b.shape_string());
  Matrix c(a.rows(), b.cols());
  view(c).noalias() = view(a) * view(b);
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw DimensionError("matmul_tn: " + a.shape_string() + "^T * " + b.shape_string());
  Matrix c(a.cols(), b.cols());
  view(c).noalias() = view(a).transpose() * view(b);
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) throw DimensionError("matmul_nt: " + a.shape_string() + " * " + b.shape_string() + "^T");
  Matrix c(a.rows(), b.rows());
  view(c).noalias() = view(a) * view(b).transpose();
  return c;
}

void matmul_tn_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  if (a.rows() != b.rows()) throw DimensionError("matmul_tn: " + a.shape_string() + "^T * " + b.shape_string());
  if (c.empty()) c = Matrix(a.cols(), b.cols());
  view(c).noalias() += view(a).transpose() * view(b);
}

void matmul_nt_acc(const Matrix& a, const Matrix& b, Matrix& c) {
  if (a.cols() != b.cols()) throw DimensionError("matmul_nt: " + a.shape_string() + " * " + b.shape_string() + "^T");
  if (c.empty()) c = Matrix(a.rows(), b.rows());
  view(c).noalias() += view(a) * view(b).transpose();
}

void sigmoid_inplace(std::span<double> v) {
  Eigen::Map<Eigen::ArrayXd> a(v.data(), static_cast<Eigen::Index>(v.size()));
  a = 1.0 / (1.0 + (-a).exp());
}

void tanh_inplace(std::span<double> v) {
  // exp(2x) saturates to inf/0, giving exactly +-1 at the tails
  Eigen::Map<Eigen::ArrayXd> a(v.data(), static_cast<Eigen::Index>(v.size()));
  a = 1.0 - 2.0 / ((2.0 * a).exp() + 1.0);
}

double max_abs(const Matrix& m) {
  double r = 0.0;
  for (double v : m.values()) r = std::max(r, std::abs(v));
  return r;
}

double squared_norm(const Matrix& m) {
  double r = 0.0;
  for (double v : m.values()) r += v * v;
  return r;
}

}  // namespace thermadapt
