#pragma once

#include <cstdint>
#include <vector>

#include "itts/backend.hpp"
#include "itts/corpus.hpp"
#include "itts/layers.hpp"
#include "itts/param_store.hpp"

namespace itts {

struct LearnedBackendConfig {
  std::size_t encoder_hidden = 32;
  std::size_t decoder_hidden = 32;
  double learning_rate = 1e-3;
  std::size_t batch_size = 8;
  std::size_t max_epochs = 150;
  // Epochs without a relative validation improvement of min_improvement.
  std::size_t patience = 30;
  double min_improvement = 1e-3;
  // Weight of the single positive stop target per sentence.
  double stop_positive_weight = 5.0;
  // Fraction of the training ids held out for the plateau check.
  double validation_fraction = 0.1;
  std::uint64_t seed = 7;

  void validate() const;
};

struct OfflineDecode {
  std::vector<Vec> frames;
  std::vector<Vec> alignments;
  std::vector<double> stop_probabilities;
};

// Toy incremental seq2seq: unidirectional GRU encoder over one-hot symbols,
// content-based attention (score_i = h_i . W_q s) restricted to the read
// prefix, GRU decoder fed [context, previous frame, end-of-source weight], a
// linear frame head on [s, context] and a sigmoid stop head on s.
//
// The end-of-source input is the attention weight on the final character when
// the whole source is in the buffer, and zero otherwise.
class LearnedBackend final : public SynthesisBackend {
 public:
  LearnedBackend(std::size_t alphabet_size, std::size_t frame_dim, LearnedBackendConfig cfg);
  LearnedBackend(std::size_t alphabet_size, std::size_t frame_dim, LearnedBackendConfig cfg,
                 ParamStore params);

  std::string name() const override { return "learned"; }
  std::size_t hidden_dim() const override { return cfg_.encoder_hidden; }
  std::size_t frame_dim() const override { return frame_dim_; }
  std::size_t alphabet_size() const { return alphabet_size_; }
  std::unique_ptr<BackendSession> reset(const Sentence& sentence, Mode mode) const override;

  const LearnedBackendConfig& config() const { return cfg_; }
  const ParamStore& params() const { return params_; }
  ParamStore& params() { return params_; }

  // Decoding with every character in the buffer from the start. Train mode is
  // teacher-forced over the ground-truth length; eval mode free-runs until the
  // stop probability exceeds 0.5 or max_frames is reached.
  OfflineDecode decode_offline(const Sentence& sentence, Mode mode, std::size_t max_frames = 0) const;

  // Teacher-forced full-buffer loss (mean frame MSE + weighted stop
  // cross-entropy) evaluated with `store`, which must hold this backend's
  // parameter layout.
  double loss(const Sentence& sentence, const ParamStore& store) const;
  // Same loss; also adds weight * dLoss/dparams to the gradients of `store`.
  double loss_and_grad(const Sentence& sentence, ParamStore& store, double weight = 1.0) const;

  // Mean per-element teacher-forced frame MSE over the sentences.
  double frame_mse(const std::vector<const Sentence*>& sentences) const;

  // Pieces shared by sessions and offline decoding.
  Vec encode_step(const ParamStore& store, std::size_t symbol, std::span<const double> h_prev,
                  GruCell::Cache* cache = nullptr) const;
  Vec attention_weights(const ParamStore& store, const std::vector<Vec>& encoder_outputs,
                        std::size_t read, std::span<const double> decoder_state) const;
  Vec decoder_input(std::span<const double> context, std::span<const double> prev_frame,
                    double end_weight) const;

  const GruCell& encoder() const { return encoder_; }
  const GruCell& decoder() const { return decoder_; }
  const Mlp& frame_head() const { return frame_head_; }
  const Mlp& stop_head() const { return stop_head_; }
  // Throws std::domain_error when `store` does not match the architecture.
  void validate_params(const ParamStore& store) const;

 private:
  LearnedBackend(std::size_t alphabet_size, std::size_t frame_dim, LearnedBackendConfig cfg,
                 ParamStore params, bool check_params);
  double loss_impl(const Sentence& sentence, const ParamStore& store, ParamStore* grads,
                   double weight) const;

  std::size_t alphabet_size_;
  std::size_t frame_dim_;
  LearnedBackendConfig cfg_;
  GruCell encoder_;
  GruCell decoder_;
  Mlp frame_head_;
  Mlp stop_head_;
  ParamStore params_;
};

struct BackendTrainingRow {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double validation_mse = 0.0;
};

struct BackendTrainingResult {
  std::vector<BackendTrainingRow> curve;
  std::size_t best_epoch = 0;
  double best_validation_mse = 0.0;
};

// Teacher-forced full-buffer regression with Adam until the validation frame
// MSE plateaus. The best parameters seen are kept. Throws std::domain_error on
// a non-finite loss.
LearnedBackend train_learned_backend(const Corpus& corpus, const LearnedBackendConfig& cfg,
                                     BackendTrainingResult* result = nullptr);

}  // namespace itts
