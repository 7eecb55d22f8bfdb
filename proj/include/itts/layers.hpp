#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "itts/param_store.hpp"
#include "itts/tensor.hpp"

namespace itts {

double sigmoid(double x);

// Numerically stable softmax (max subtracted). Throws std::domain_error on an
// empty or non-finite input.
Vec softmax(std::span<const double> logits);
Vec log_softmax(std::span<const double> logits);

struct GruSpec {
  std::size_t input = 0;
  std::size_t hidden = 0;
};

// Gated recurrent unit with the reset gate applied before the candidate's
// recurrent projection:
//   z  = sigmoid(W_z x + U_z h + b_z)
//   r  = sigmoid(W_r x + U_r h + b_r)
//   h~ = tanh(W_h x + U_h (r * h) + b_h)
//   h' = (1 - z) * h + z * h~
class GruCell {
 public:
  struct Cache {
    Vec x, h_prev, z, r, candidate, reset_hidden;
    std::uint64_t version = 0;
  };
  struct InputGrads {
    Vec x;
    Vec h_prev;
  };

  GruCell() = default;
  GruCell(std::string prefix, GruSpec spec);

  const GruSpec& spec() const { return spec_; }
  void init(ParamStore& store, std::mt19937_64& rng) const;
  // Throws std::domain_error unless the store holds tensors of the right shape.
  void validate(const ParamStore& store) const;

  Vec forward(const ParamStore& store, std::span<const double> x, std::span<const double> h_prev,
              Cache* cache = nullptr) const;
  // Accumulates parameter gradients into the store. Throws std::domain_error
  // when the cache predates the last parameter update.
  InputGrads backward(ParamStore& store, const Cache& cache,
                      std::span<const double> grad_h_new) const;

 private:
  std::string name(const char* suffix) const { return prefix_ + "." + suffix; }

  std::string prefix_;
  GruSpec spec_;
};

enum class Activation { kIdentity, kRelu, kTanh, kSigmoid };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view s);

struct DenseSpec {
  std::size_t output = 0;
  Activation activation = Activation::kIdentity;
};

struct MlpSpec {
  std::size_t input = 0;
  std::vector<DenseSpec> layers;
  std::size_t output() const { return layers.empty() ? input : layers.back().output; }
};

// Stack of dense layers; layer l uses tensors "<prefix>.W<l>" and "<prefix>.b<l>".
class Mlp {
 public:
  struct Cache {
    std::vector<Vec> inputs;       // input to each layer
    std::vector<Vec> activations;  // output of each layer after its nonlinearity
    std::uint64_t version = 0;
  };

  Mlp() = default;
  Mlp(std::string prefix, MlpSpec spec);

  const MlpSpec& spec() const { return spec_; }
  void init(ParamStore& store, std::mt19937_64& rng) const;
  void validate(const ParamStore& store) const;

  Vec forward(const ParamStore& store, std::span<const double> x, Cache* cache = nullptr) const;
  Vec backward(ParamStore& store, const Cache& cache, std::span<const double> grad_y) const;

 private:
  std::string weight(std::size_t l) const { return prefix_ + ".W" + std::to_string(l); }
  std::string bias(std::size_t l) const { return prefix_ + ".b" + std::to_string(l); }

  std::string prefix_;
  MlpSpec spec_;
};

}  // namespace itts
