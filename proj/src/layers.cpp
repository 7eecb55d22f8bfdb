#include "itts/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace itts {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vec softmax(std::span<const double> logits) {
  if (logits.empty()) throw std::domain_error("softmax of an empty vector");
  double max = logits[0];
  for (double v : logits) {
    if (!std::isfinite(v)) throw std::domain_error("softmax of a non-finite logit");
    max = std::max(max, v);
  }
  Vec out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - max);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

Vec log_softmax(std::span<const double> logits) {
  if (logits.empty()) throw std::domain_error("softmax of an empty vector");
  double max = logits[0];
  for (double v : logits) {
    if (!std::isfinite(v)) throw std::domain_error("softmax of a non-finite logit");
    max = std::max(max, v);
  }
  double sum = 0.0;
  for (double v : logits) sum += std::exp(v - max);
  const double log_z = max + std::log(sum);
  Vec out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - log_z;
  return out;
}

// ---------------------------------------------------------------------------
// GRU

GruCell::GruCell(std::string prefix, GruSpec spec) : prefix_(std::move(prefix)), spec_(spec) {
  if (spec_.input == 0 || spec_.hidden == 0) throw std::invalid_argument("GRU sizes must be positive");
}

void GruCell::init(ParamStore& store, std::mt19937_64& rng) const {
  const std::size_t in = spec_.input;
  const std::size_t hid = spec_.hidden;
  for (const char* gate : {"z", "r", "h"}) {
    store.add(prefix_ + ".W_" + gate, uniform_init({hid, in}, hid, rng));
    store.add(prefix_ + ".U_" + gate, uniform_init({hid, hid}, hid, rng));
    store.add(prefix_ + ".b_" + gate, uniform_init({hid}, hid, rng));
  }
}

void GruCell::validate(const ParamStore& store) const {
  const std::vector<std::size_t> w{spec_.hidden, spec_.input};
  const std::vector<std::size_t> u{spec_.hidden, spec_.hidden};
  const std::vector<std::size_t> b{spec_.hidden};
  for (const char* gate : {"z", "r", "h"}) {
    const std::string g(gate);
    for (const auto& [nm, shape] : {std::pair{prefix_ + ".W_" + g, w},
                                    std::pair{prefix_ + ".U_" + g, u},
                                    std::pair{prefix_ + ".b_" + g, b}}) {
      if (!store.contains(nm)) throw std::domain_error("missing tensor '" + nm + "'");
      if (store.value(nm).shape() != shape) throw std::domain_error("shape mismatch for '" + nm + "'");
    }
  }
}

Vec GruCell::forward(const ParamStore& store, std::span<const double> x,
                     std::span<const double> h_prev, Cache* cache) const {
  if (x.size() != spec_.input || h_prev.size() != spec_.hidden) {
    throw std::domain_error("shape mismatch: GRU expects input " + std::to_string(spec_.input) +
                            " and hidden " + std::to_string(spec_.hidden) + ", got " +
                            std::to_string(x.size()) + " and " + std::to_string(h_prev.size()));
  }
  const std::size_t hid = spec_.hidden;
  Vec z = affine(store.value(name("W_z")), x, store.value(name("b_z")));
  Vec r = affine(store.value(name("W_r")), x, store.value(name("b_r")));
  {
    const Vec uz = matvec(store.value(name("U_z")), h_prev);
    const Vec ur = matvec(store.value(name("U_r")), h_prev);
    for (std::size_t i = 0; i < hid; ++i) {
      z[i] = sigmoid(z[i] + uz[i]);
      r[i] = sigmoid(r[i] + ur[i]);
    }
  }
  Vec rh(hid);
  for (std::size_t i = 0; i < hid; ++i) rh[i] = r[i] * h_prev[i];
  Vec cand = affine(store.value(name("W_h")), x, store.value(name("b_h")));
  const Vec uh = matvec(store.value(name("U_h")), rh);
  Vec h(hid);
  for (std::size_t i = 0; i < hid; ++i) {
    cand[i] = std::tanh(cand[i] + uh[i]);
    h[i] = (1.0 - z[i]) * h_prev[i] + z[i] * cand[i];
  }
  if (cache) {
    cache->x.assign(x.begin(), x.end());
    cache->h_prev.assign(h_prev.begin(), h_prev.end());
    cache->z = std::move(z);
    cache->r = std::move(r);
    cache->candidate = std::move(cand);
    cache->reset_hidden = std::move(rh);
    cache->version = store.version();
  }
  return h;
}

GruCell::InputGrads GruCell::backward(ParamStore& store, const Cache& cache,
                                      std::span<const double> grad_h_new) const {
  if (cache.version != store.version()) throw std::domain_error("stale GRU cache");
  const std::size_t hid = spec_.hidden;
  if (grad_h_new.size() != hid || cache.z.size() != hid) {
    throw std::domain_error("shape mismatch: GRU upstream gradient");
  }
  Vec da_z(hid), da_h(hid), da_r(hid);
  InputGrads out{Vec(spec_.input, 0.0), Vec(hid, 0.0)};
  for (std::size_t i = 0; i < hid; ++i) {
    const double g = grad_h_new[i];
    const double z = cache.z[i];
    const double c = cache.candidate[i];
    da_z[i] = g * (c - cache.h_prev[i]) * z * (1.0 - z);
    da_h[i] = g * z * (1.0 - c * c);
    out.h_prev[i] = g * (1.0 - z);
  }
  Vec d_rh(hid, 0.0);
  matvec_transpose_acc(store.value(name("U_h")), da_h, d_rh);
  for (std::size_t i = 0; i < hid; ++i) {
    const double r = cache.r[i];
    da_r[i] = d_rh[i] * cache.h_prev[i] * r * (1.0 - r);
    out.h_prev[i] += d_rh[i] * r;
  }
  matvec_transpose_acc(store.value(name("U_z")), da_z, out.h_prev);
  matvec_transpose_acc(store.value(name("U_r")), da_r, out.h_prev);
  matvec_transpose_acc(store.value(name("W_z")), da_z, out.x);
  matvec_transpose_acc(store.value(name("W_r")), da_r, out.x);
  matvec_transpose_acc(store.value(name("W_h")), da_h, out.x);

  outer_acc(da_z, cache.x, store.grad(name("W_z")));
  outer_acc(da_r, cache.x, store.grad(name("W_r")));
  outer_acc(da_h, cache.x, store.grad(name("W_h")));
  outer_acc(da_z, cache.h_prev, store.grad(name("U_z")));
  outer_acc(da_r, cache.h_prev, store.grad(name("U_r")));
  outer_acc(da_h, cache.reset_hidden, store.grad(name("U_h")));
  axpy(1.0, da_z, store.grad(name("b_z")).span());
  axpy(1.0, da_r, store.grad(name("b_r")).span());
  axpy(1.0, da_h, store.grad(name("b_h")).span());
  return out;
}

// ---------------------------------------------------------------------------
// MLP

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::kIdentity: return "identity";
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
    case Activation::kSigmoid: return "sigmoid";
  }
  return "identity";
}

Activation activation_from_string(std::string_view s) {
  if (s == "identity") return Activation::kIdentity;
  if (s == "relu") return Activation::kRelu;
  if (s == "tanh") return Activation::kTanh;
  if (s == "sigmoid") return Activation::kSigmoid;
  throw std::invalid_argument("unknown activation '" + std::string(s) + "'");
}

namespace {

double activate(Activation a, double v) {
  switch (a) {
    case Activation::kIdentity: return v;
    case Activation::kRelu: return v > 0.0 ? v : 0.0;
    case Activation::kTanh: return std::tanh(v);
    case Activation::kSigmoid: return sigmoid(v);
  }
  return v;
}

// Derivative expressed through the activation's output y.
double activation_slope(Activation a, double y) {
  switch (a) {
    case Activation::kIdentity: return 1.0;
    case Activation::kRelu: return y > 0.0 ? 1.0 : 0.0;
    case Activation::kTanh: return 1.0 - y * y;
    case Activation::kSigmoid: return y * (1.0 - y);
  }
  return 1.0;
}

}  // namespace

Mlp::Mlp(std::string prefix, MlpSpec spec) : prefix_(std::move(prefix)), spec_(std::move(spec)) {
  if (spec_.input == 0) throw std::invalid_argument("MLP input size must be positive");
  for (const auto& layer : spec_.layers) {
    if (layer.output == 0) throw std::invalid_argument("MLP layer sizes must be positive");
  }
}

void Mlp::init(ParamStore& store, std::mt19937_64& rng) const {
  std::size_t in = spec_.input;
  for (std::size_t l = 0; l < spec_.layers.size(); ++l) {
    const std::size_t out = spec_.layers[l].output;
    store.add(weight(l), uniform_init({out, in}, in, rng));
    store.add(bias(l), uniform_init({out}, in, rng));
    in = out;
  }
}

void Mlp::validate(const ParamStore& store) const {
  std::size_t in = spec_.input;
  for (std::size_t l = 0; l < spec_.layers.size(); ++l) {
    const std::size_t out = spec_.layers[l].output;
    for (const auto& [nm, shape] : {std::pair{weight(l), std::vector<std::size_t>{out, in}},
                                    std::pair{bias(l), std::vector<std::size_t>{out}}}) {
      if (!store.contains(nm)) throw std::domain_error("missing tensor '" + nm + "'");
      if (store.value(nm).shape() != shape) throw std::domain_error("shape mismatch for '" + nm + "'");
    }
    in = out;
  }
}

Vec Mlp::forward(const ParamStore& store, std::span<const double> x, Cache* cache) const {
  if (x.size() != spec_.input) {
    throw std::domain_error("shape mismatch: MLP expects input " + std::to_string(spec_.input) +
                            ", got " + std::to_string(x.size()));
  }
  if (cache) {
    cache->inputs.clear();
    cache->activations.clear();
    cache->version = store.version();
  }
  Vec cur(x.begin(), x.end());
  for (std::size_t l = 0; l < spec_.layers.size(); ++l) {
    Vec y = affine(store.value(weight(l)), cur, store.value(bias(l)));
    const Activation act = spec_.layers[l].activation;
    for (double& v : y) v = activate(act, v);
    if (cache) {
      cache->inputs.push_back(std::move(cur));
      cache->activations.push_back(y);
    }
    cur = std::move(y);
  }
  return cur;
}

Vec Mlp::backward(ParamStore& store, const Cache& cache, std::span<const double> grad_y) const {
  if (cache.version != store.version()) throw std::domain_error("stale MLP cache");
  if (cache.inputs.size() != spec_.layers.size()) throw std::domain_error("MLP cache does not match spec");
  Vec grad(grad_y.begin(), grad_y.end());
  for (std::size_t l = spec_.layers.size(); l-- > 0;) {
    const Vec& y = cache.activations[l];
    if (grad.size() != y.size()) throw std::domain_error("shape mismatch: MLP upstream gradient");
    const Activation act = spec_.layers[l].activation;
    for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= activation_slope(act, y[i]);
    outer_acc(grad, cache.inputs[l], store.grad(weight(l)));
    axpy(1.0, grad, store.grad(bias(l)).span());
    Vec grad_in(cache.inputs[l].size(), 0.0);
    matvec_transpose_acc(store.value(weight(l)), grad, grad_in);
    grad = std::move(grad_in);
  }
  return grad;
}

}  // namespace itts
