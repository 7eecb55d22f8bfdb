#include "itts/param_store.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace itts {

void ParamStore::add(const std::string& name, Tensor init) {
  if (entries_.count(name)) throw std::invalid_argument("duplicate parameter '" + name + "'");
  Entry e;
  e.grad = Tensor(init.shape(), 0.0);
  e.adam.first_moment = Tensor(init.shape(), 0.0);
  e.adam.second_moment = Tensor(init.shape(), 0.0);
  e.value = std::move(init);
  entries_.emplace(name, std::move(e));
  ++version_;
}

const ParamStore::Entry& ParamStore::entry(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::out_of_range("missing parameter '" + name + "'");
  return it->second;
}

ParamStore::Entry& ParamStore::entry(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw std::out_of_range("missing parameter '" + name + "'");
  return it->second;
}

const Tensor& ParamStore::value(const std::string& name) const { return entry(name).value; }

Tensor& ParamStore::mutable_value(const std::string& name) {
  ++version_;
  return entry(name).value;
}

const Tensor& ParamStore::grad(const std::string& name) const { return entry(name).grad; }
Tensor& ParamStore::grad(const std::string& name) { return entry(name).grad; }
const AdamState& ParamStore::adam(const std::string& name) const { return entry(name).adam; }
AdamState& ParamStore::adam(const std::string& name) { return entry(name).adam; }

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, _] : entries_) out.push_back(name);
  return out;
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [_, e] : entries_) n += e.value.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [_, e] : entries_) e.grad.fill(0.0);
}

double ParamStore::grad_norm() const {
  double acc = 0.0;
  for (const auto& [_, e] : entries_) {
    for (double g : e.grad.data()) acc += g * g;
  }
  return std::sqrt(acc);
}

void ParamStore::scale_grad(double factor) {
  for (auto& [_, e] : entries_) {
    for (double& g : e.grad.data()) g *= factor;
  }
}

void adam_step(ParamStore& store, const AdamConfig& cfg) {
  const auto names = store.names();
  for (const auto& name : names) {
    if (!store.grad(name).all_finite()) {
      throw std::domain_error("non-finite gradient in parameter '" + name + "'");
    }
  }
  for (const auto& name : names) {
    AdamState& st = store.adam(name);
    const Tensor& g = store.grad(name);
    Tensor& p = store.mutable_value(name);
    ++st.step;
    const double t = static_cast<double>(st.step);
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t i = 0; i < p.size(); ++i) {
      double& m = st.first_moment[i];
      double& v = st.second_moment[i];
      m = cfg.beta1 * m + (1.0 - cfg.beta1) * g[i];
      v = cfg.beta2 * v + (1.0 - cfg.beta2) * g[i] * g[i];
      const double m_hat = m / c1;
      const double v_hat = v / c2;
      p[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

Tensor uniform_init(std::vector<std::size_t> shape, std::size_t fan_in, std::mt19937_64& rng) {
  Tensor t(std::move(shape), 0.0);
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : t.data()) v = dist(rng);
  return t;
}

std::map<std::string, Tensor> finite_difference_grad(const ScalarObjective& f, ParamStore& store,
                                                     double h) {
  std::map<std::string, Tensor> out;
  for (const auto& name : store.names()) {
    Tensor g(store.value(name).shape(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double original = store.value(name)[i];
      store.mutable_value(name)[i] = original + h;
      const double up = f(store);
      store.mutable_value(name)[i] = original - h;
      const double down = f(store);
      store.mutable_value(name)[i] = original;
      g[i] = (up - down) / (2.0 * h);
    }
    out.emplace(name, std::move(g));
  }
  return out;
}

GradCheckResult compare_gradients(const ParamStore& analytic,
                                  const std::map<std::string, Tensor>& numeric, double rel_tol,
                                  double abs_tol) {
  GradCheckResult res;
  for (const auto& [name, num] : numeric) {
    const Tensor& ana = analytic.grad(name);
    if (ana.shape() != num.shape()) {
      res.passed = false;
      res.worst_param = name;
      return res;
    }
    for (std::size_t i = 0; i < num.size(); ++i) {
      const double a = ana[i];
      const double n = num[i];
      const double abs_err = std::abs(a - n);
      const double scale = std::max(std::abs(a), std::abs(n));
      const double rel_err = scale > 0.0 ? abs_err / scale : 0.0;
      const bool ok = abs_err <= std::max(rel_tol * scale, abs_tol);
      if (abs_err > res.max_abs_error) res.max_abs_error = abs_err;
      if (!ok && rel_err > res.max_rel_error) {
        res.max_rel_error = rel_err;
        res.worst_param = name + "[" + std::to_string(i) + "]";
      }
      if (!ok) res.passed = false;
    }
  }
  return res;
}

}  // namespace itts
