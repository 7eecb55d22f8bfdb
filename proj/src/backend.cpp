#include "itts/backend.hpp"

#include <stdexcept>

namespace itts {

Vec context_vector(const std::vector<Vec>& encoder_outputs, std::span<const double> alpha) {
  if (alpha.empty() || alpha.size() > encoder_outputs.size()) {
    throw std::domain_error("attention length " + std::to_string(alpha.size()) +
                            " does not fit a buffer of " +
                            std::to_string(encoder_outputs.size()) + " encoder outputs");
  }
  Vec c(encoder_outputs.front().size(), 0.0);
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (encoder_outputs[i].size() != c.size()) throw std::domain_error("ragged encoder outputs");
    axpy(alpha[i], encoder_outputs[i], c);
  }
  return c;
}

void BackendSession::read() {
  if (read_count() >= sentence().length()) throw std::domain_error("source exhausted");
  encoder_outputs_.push_back(encode_next());
  attention_valid_ = false;
}

const Vec& BackendSession::attention() {
  if (!attention_valid_) {
    pending_attention_ = compute_attention();
    attention_valid_ = true;
  }
  return pending_attention_;
}

Vec BackendSession::decode_frame(std::span<const double> context,
                                 std::span<const double> prev_frame) {
  if (mode_ == Mode::kTrain && frames_emitted() >= sentence().frame_count()) {
    throw std::domain_error("decode past the ground-truth frame count in train mode");
  }
  Vec row(sentence().length(), 0.0);
  const Vec& alpha = attention();
  std::copy(alpha.begin(), alpha.end(), row.begin());
  Vec frame = decode(context, prev_frame);
  alignments_.push_back(std::move(row));
  attention_valid_ = false;
  return frame;
}

// ---------------------------------------------------------------------------

Vec oracle_attention(const Sentence& sentence, std::size_t frame, std::size_t read) {
  if (read == 0 || read > sentence.length()) throw std::domain_error("invalid buffer size");
  const std::size_t owner =
      frame < sentence.frame_count() ? sentence.owner(frame) : sentence.length() - 1;
  Vec alpha(read, 0.0);
  double total = 0.0;
  auto put = [&](std::size_t i, double w) {
    if (i < read) {
      alpha[i] += w;
      total += w;
    }
  };
  if (owner > 0) put(owner - 1, 0.1);
  put(owner, 0.8);
  put(owner + 1, 0.1);
  if (total == 0.0) {
    alpha[read - 1] = 1.0;
    return alpha;
  }
  for (double& a : alpha) a /= total;
  return alpha;
}

bool oracle_frame_degraded(const Sentence& sentence, std::size_t frame, std::size_t read) {
  const std::size_t owner = sentence.owner(frame);
  return sentence.sensitive[owner] && owner + 1 < sentence.length() && owner + 1 >= read;
}

namespace {

class OracleSession final : public BackendSession {
 public:
  OracleSession(const SymbolInventory& inv, const Sentence& sentence, Mode mode)
      : BackendSession(sentence, mode), inv_(&inv) {
    encoder_outputs_.push_back(encode_next());
  }

  std::unique_ptr<BackendSession> clone() const override {
    return std::unique_ptr<BackendSession>(new OracleSession(*this));
  }

  bool finished() const override { return frames_emitted() >= sentence().frame_count(); }

 protected:
  Vec encode_next() override { return inv_->base.at(sentence().symbols[read_count()]); }

  Vec compute_attention() const override {
    return oracle_attention(sentence(), frames_emitted(), read_count());
  }

  Vec decode(std::span<const double>, std::span<const double>) override {
    const std::size_t f = frames_emitted();
    if (f >= sentence().frame_count()) throw std::domain_error("oracle decode past the last frame");
    const std::size_t owner = sentence().owner(f);
    Vec frame = inv_->base[sentence().symbols[owner]];
    const bool has_successor = owner + 1 < sentence().length();
    if (sentence().sensitive[owner] && has_successor && owner + 1 < read_count()) {
      axpy(1.0, inv_->coart[sentence().symbols[owner + 1]], frame);
    }
    return frame;
  }

 private:
  OracleSession(const OracleSession&) = default;
  const SymbolInventory* inv_;
};

}  // namespace

OracleBackend::OracleBackend(SymbolInventory inventory) : inventory_(std::move(inventory)) {}

std::unique_ptr<BackendSession> OracleBackend::reset(const Sentence& sentence, Mode mode) const {
  if (sentence.length() == 0) throw std::domain_error("empty sentence");
  return std::make_unique<OracleSession>(inventory_, sentence, mode);
}

}  // namespace itts
