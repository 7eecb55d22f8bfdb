#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "itts/core.hpp"
#include "itts/corpus.hpp"
#include "itts/tensor.hpp"

namespace itts {

// Attention context: c = sum_i alpha_i h_i over the first
// alpha.size() encoder outputs. Throws std::domain_error when alpha is empty
// or longer than the buffer.
Vec context_vector(const std::vector<Vec>& encoder_outputs, std::span<const double> alpha);

// Per-episode synthesis state over a restricted buffer h_1..h_R.
//
// Encoder outputs only ever depend on the characters read so far, attention is
// restricted to the R read columns, and every emitted frame records the
// attention row it used.
class BackendSession {
 public:
  virtual ~BackendSession() = default;

  virtual std::unique_ptr<BackendSession> clone() const = 0;

  const Sentence& sentence() const { return *sentence_; }
  Mode mode() const { return mode_; }
  std::size_t read_count() const { return encoder_outputs_.size(); }
  std::size_t frames_emitted() const { return alignments_.size(); }
  const std::vector<Vec>& encoder_outputs() const { return encoder_outputs_; }
  // One row per emitted frame, each of length N with zeros beyond R.
  const std::vector<Vec>& alignments() const { return alignments_; }

  // Appends h_{R+1}. Throws std::domain_error("source exhausted") at R = N.
  void read();
  // Attention over columns 1..R for the next frame; nonnegative, sums to one.
  const Vec& attention();
  // Emits frame S+1 from the context and the previous frame. In train mode,
  // decoding past the ground-truth length throws std::domain_error.
  Vec decode_frame(std::span<const double> context, std::span<const double> prev_frame);
  virtual bool finished() const = 0;

 protected:
  BackendSession(const Sentence& sentence, Mode mode) : sentence_(&sentence), mode_(mode) {}
  BackendSession(const BackendSession&) = default;

  virtual Vec encode_next() = 0;
  virtual Vec compute_attention() const = 0;
  virtual Vec decode(std::span<const double> context, std::span<const double> prev_frame) = 0;
  // Attention row of the frame being decoded; valid inside decode().
  const Vec& current_attention() const { return pending_attention_; }

  std::vector<Vec> encoder_outputs_;

 private:
  const Sentence* sentence_;
  Mode mode_;
  std::vector<Vec> alignments_;
  Vec pending_attention_;
  bool attention_valid_ = false;
};

class SynthesisBackend {
 public:
  virtual ~SynthesisBackend() = default;
  virtual std::string name() const = 0;
  // Dimension of the encoder outputs (and of the context vector).
  virtual std::size_t hidden_dim() const = 0;
  virtual std::size_t frame_dim() const = 0;
  // Starts an episode with the first character already encoded (R = 1).
  // Throws std::domain_error for an empty sentence. The sentence must outlive
  // the session.
  virtual std::unique_ptr<BackendSession> reset(const Sentence& sentence, Mode mode) const = 0;
};

// Analytic backend built from the corpus inventory. h_i = base(x_i); attention
// puts 0.8 on the symbol owning the next frame and 0.1 on each neighbour,
// renormalised over the read columns; the decoded frame is exact unless the
// owner is lookahead-sensitive and its successor has not been read, in which
// case the coarticulation term is missing.
class OracleBackend final : public SynthesisBackend {
 public:
  explicit OracleBackend(SymbolInventory inventory);

  std::string name() const override { return "oracle"; }
  std::size_t hidden_dim() const override { return inventory_.frame_dim; }
  std::size_t frame_dim() const override { return inventory_.frame_dim; }
  std::unique_ptr<BackendSession> reset(const Sentence& sentence, Mode mode) const override;

  const SymbolInventory& inventory() const { return inventory_; }

 private:
  SymbolInventory inventory_;
};

// Oracle attention row for zero-based frame `frame` with `read` columns
// available.
Vec oracle_attention(const Sentence& sentence, std::size_t frame, std::size_t read);

// Oracle squared-error model: true when frame `frame` is decoded without its
// coarticulation term given `read` characters.
bool oracle_frame_degraded(const Sentence& sentence, std::size_t frame, std::size_t read);

}  // namespace itts
