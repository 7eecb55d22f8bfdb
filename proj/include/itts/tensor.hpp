#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace itts {

// Row-major dense array of doubles.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape, std::vector<double> data);

  static Tensor vector(std::size_t n, double fill = 0.0) { return Tensor({n}, fill); }
  static Tensor matrix(std::size_t rows, std::size_t cols, double fill = 0.0) {
    return Tensor({rows, cols}, fill);
  }

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }
  std::size_t rows() const { return shape_.empty() ? 0 : shape_[0]; }
  std::size_t cols() const { return shape_.size() < 2 ? 1 : shape_[1]; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& at(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  double at(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

  std::span<double> span() { return data_; }
  std::span<const double> span() const { return data_; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols(), cols());
  }
  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  void fill(double v);
  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

std::size_t shape_size(const std::vector<std::size_t>& shape);

// Small dense kernels on spans. Sizes are checked and mismatches throw
// std::domain_error.
using Vec = std::vector<double>;

// y = W x + b, W is [out, in].
Vec affine(const Tensor& w, std::span<const double> x, const Tensor& b);
// y = W x
Vec matvec(const Tensor& w, std::span<const double> x);
// x_grad += W^T g
void matvec_transpose_acc(const Tensor& w, std::span<const double> g, std::span<double> x_grad);
// W_grad += g x^T
void outer_acc(std::span<const double> g, std::span<const double> x, Tensor& w_grad);

double dot(std::span<const double> a, std::span<const double> b);
void axpy(double a, std::span<const double> x, std::span<double> y);
Vec concat(std::initializer_list<std::span<const double>> parts);
double mean_squared_error(std::span<const double> a, std::span<const double> b);

}  // namespace itts
