#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "itts/tensor.hpp"

namespace itts {

struct AdamState {
  Tensor first_moment;
  Tensor second_moment;
  std::uint64_t step = 0;
};

// Named parameters with their gradients and optimizer state. Every mutation of
// parameter values bumps version(), which layer caches use to detect staleness.
class ParamStore {
 public:
  void add(const std::string& name, Tensor init);
  bool contains(const std::string& name) const { return entries_.count(name) > 0; }

  const Tensor& value(const std::string& name) const;
  Tensor& mutable_value(const std::string& name);
  const Tensor& grad(const std::string& name) const;
  Tensor& grad(const std::string& name);
  const AdamState& adam(const std::string& name) const;
  AdamState& adam(const std::string& name);

  std::vector<std::string> names() const;
  std::size_t parameter_count() const;
  std::uint64_t version() const { return version_; }
  void touch() { ++version_; }

  void zero_grad();
  double grad_norm() const;
  void scale_grad(double factor);

 private:
  struct Entry {
    Tensor value;
    Tensor grad;
    AdamState adam;
  };
  const Entry& entry(const std::string& name) const;
  Entry& entry(const std::string& name);

  std::map<std::string, Entry> entries_;
  std::uint64_t version_ = 0;
};

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One bias-corrected Adam update using the gradients held in the store.
// Throws std::domain_error when any gradient is non-finite; the store is left
// untouched in that case.
void adam_step(ParamStore& store, const AdamConfig& cfg);

// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
Tensor uniform_init(std::vector<std::size_t> shape, std::size_t fan_in, std::mt19937_64& rng);

using ScalarObjective = std::function<double(const ParamStore&)>;

// Central differences of f with respect to every parameter element. The store
// is restored exactly before returning.
std::map<std::string, Tensor> finite_difference_grad(const ScalarObjective& f, ParamStore& store,
                                                     double h = 1e-5);

struct GradCheckResult {
  double max_abs_error = 0.0;
  double max_rel_error = 0.0;
  std::string worst_param;
  bool passed = true;
};

// Compares the store's analytic gradients with numeric ones. An element passes
// when |a - n| <= max(rel_tol * max(|a|, |n|), abs_tol).
GradCheckResult compare_gradients(const ParamStore& analytic,
                                  const std::map<std::string, Tensor>& numeric,
                                  double rel_tol = 1e-4, double abs_tol = 1e-7);

}  // namespace itts
