#include "itts/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>

namespace itts {

std::size_t shape_size(const std::vector<std::size_t>& shape) {
  if (shape.empty()) return 0;
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(std::vector<std::size_t> shape, double fill) : shape_(std::move(shape)) {
  for (auto extent : shape_) {
    if (extent == 0) throw std::domain_error("tensor extents must be positive");
  }
  data_.assign(shape_size(shape_), fill);
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  for (auto extent : shape_) {
    if (extent == 0) throw std::domain_error("tensor extents must be positive");
  }
  if (data_.size() != shape_size(shape_)) {
    throw std::domain_error("tensor data length " + std::to_string(data_.size()) +
                            " does not match shape size " +
                            std::to_string(shape_size(shape_)));
  }
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

namespace {

void check_matrix(const Tensor& w, std::size_t in) {
  if (w.rank() != 2 || w.cols() != in) {
    throw std::domain_error("shape mismatch: matrix with " + std::to_string(w.cols()) +
                            " columns applied to vector of length " + std::to_string(in));
  }
}

}  // namespace

Vec matvec(const Tensor& w, std::span<const double> x) {
  check_matrix(w, x.size());
  const std::size_t rows = w.rows();
  const std::size_t cols = w.cols();
  Vec y(rows, 0.0);
  const double* p = w.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    const double* wr = p + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc += wr[c] * x[c];
    y[r] = acc;
  }
  return y;
}

Vec affine(const Tensor& w, std::span<const double> x, const Tensor& b) {
  Vec y = matvec(w, x);
  if (b.size() != y.size()) throw std::domain_error("shape mismatch: bias length");
  for (std::size_t r = 0; r < y.size(); ++r) y[r] += b[r];
  return y;
}

void matvec_transpose_acc(const Tensor& w, std::span<const double> g, std::span<double> x_grad) {
  check_matrix(w, x_grad.size());
  if (g.size() != w.rows()) throw std::domain_error("shape mismatch: upstream gradient length");
  const std::size_t cols = w.cols();
  const double* p = w.data().data();
  for (std::size_t r = 0; r < g.size(); ++r) {
    const double gr = g[r];
    if (gr == 0.0) continue;
    const double* wr = p + r * cols;
    for (std::size_t c = 0; c < cols; ++c) x_grad[c] += wr[c] * gr;
  }
}

void outer_acc(std::span<const double> g, std::span<const double> x, Tensor& w_grad) {
  check_matrix(w_grad, x.size());
  if (g.size() != w_grad.rows()) throw std::domain_error("shape mismatch: outer product rows");
  const std::size_t cols = w_grad.cols();
  double* p = w_grad.data().data();
  for (std::size_t r = 0; r < g.size(); ++r) {
    const double gr = g[r];
    if (gr == 0.0) continue;
    double* wr = p + r * cols;
    for (std::size_t c = 0; c < cols; ++c) wr[c] += gr * x[c];
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::domain_error("shape mismatch: dot product");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw std::domain_error("shape mismatch: axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

Vec concat(std::initializer_list<std::span<const double>> parts) {
  Vec out;
  for (auto part : parts) out.insert(out.end(), part.begin(), part.end());
  return out;
}

double mean_squared_error(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::domain_error("frame dimension mismatch: " + std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()));
  }
  if (a.empty()) return 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.size());
}

}  // namespace itts
