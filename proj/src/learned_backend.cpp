#include "itts/learned_backend.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace itts {

namespace {

const char* kQuery = "att.W_q";

double stop_target_grad(double prob, bool positive, double positive_weight) {
  return positive ? positive_weight * (prob - 1.0) : prob;
}

double stop_target_loss(double logit, bool positive, double positive_weight) {
  // log(1 + e^{-l}) and log(1 + e^{l}) without overflow.
  const double softplus_neg = std::max(-logit, 0.0) + std::log1p(std::exp(-std::abs(logit)));
  const double softplus_pos = std::max(logit, 0.0) + std::log1p(std::exp(-std::abs(logit)));
  return positive ? positive_weight * softplus_neg : softplus_pos;
}

}  // namespace

void LearnedBackendConfig::validate() const {
  if (encoder_hidden == 0 || decoder_hidden == 0) {
    throw std::invalid_argument("backend hidden sizes must be positive");
  }
  if (!(learning_rate > 0.0)) throw std::invalid_argument("backend.learning_rate must be > 0");
  if (batch_size == 0) throw std::invalid_argument("backend.batch_size must be >= 1");
  if (max_epochs == 0) throw std::invalid_argument("backend.max_epochs must be >= 1");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw std::invalid_argument("backend.validation_fraction must lie in [0, 1)");
  }
  if (!(stop_positive_weight > 0.0)) {
    throw std::invalid_argument("backend.stop_positive_weight must be > 0");
  }
}

LearnedBackend::LearnedBackend(std::size_t alphabet_size, std::size_t frame_dim,
                               LearnedBackendConfig cfg)
    : LearnedBackend(alphabet_size, frame_dim, cfg, ParamStore{}, false) {
  std::mt19937_64 rng(cfg_.seed);
  encoder_.init(params_, rng);
  params_.add(kQuery, uniform_init({cfg_.encoder_hidden, cfg_.decoder_hidden},
                                   cfg_.decoder_hidden, rng));
  decoder_.init(params_, rng);
  frame_head_.init(params_, rng);
  stop_head_.init(params_, rng);
}

LearnedBackend::LearnedBackend(std::size_t alphabet_size, std::size_t frame_dim,
                               LearnedBackendConfig cfg, ParamStore params)
    : LearnedBackend(alphabet_size, frame_dim, cfg, std::move(params), true) {}

LearnedBackend::LearnedBackend(std::size_t alphabet_size, std::size_t frame_dim,
                               LearnedBackendConfig cfg, ParamStore params, bool check_params)
    : alphabet_size_(alphabet_size),
      frame_dim_(frame_dim),
      cfg_(cfg),
      encoder_("enc", GruSpec{alphabet_size, cfg.encoder_hidden}),
      decoder_("dec", GruSpec{cfg.encoder_hidden + frame_dim + 1, cfg.decoder_hidden}),
      frame_head_("frame", MlpSpec{cfg.decoder_hidden + cfg.encoder_hidden,
                                   {{frame_dim, Activation::kIdentity}}}),
      stop_head_("stop", MlpSpec{cfg.decoder_hidden, {{1, Activation::kIdentity}}}),
      params_(std::move(params)) {
  cfg_.validate();
  if (alphabet_size == 0 || frame_dim == 0) throw std::invalid_argument("backend sizes must be positive");
  if (check_params) validate_params(params_);
}

void LearnedBackend::validate_params(const ParamStore& store) const {
  encoder_.validate(store);
  decoder_.validate(store);
  frame_head_.validate(store);
  stop_head_.validate(store);
  if (!store.contains(kQuery)) throw std::domain_error(std::string("missing tensor '") + kQuery + "'");
  const std::vector<std::size_t> q{cfg_.encoder_hidden, cfg_.decoder_hidden};
  if (store.value(kQuery).shape() != q) throw std::domain_error("shape mismatch for 'att.W_q'");
  const std::size_t expected = 3 * (cfg_.encoder_hidden * alphabet_size_ +
                                    cfg_.encoder_hidden * cfg_.encoder_hidden + cfg_.encoder_hidden) +
                               cfg_.encoder_hidden * cfg_.decoder_hidden +
                               3 * (cfg_.decoder_hidden * decoder_.spec().input +
                                    cfg_.decoder_hidden * cfg_.decoder_hidden + cfg_.decoder_hidden) +
                               frame_dim_ * (cfg_.decoder_hidden + cfg_.encoder_hidden) + frame_dim_ +
                               cfg_.decoder_hidden + 1;
  if (store.parameter_count() != expected) {
    throw std::domain_error("unexpected tensors in backend parameters");
  }
}

Vec LearnedBackend::encode_step(const ParamStore& store, std::size_t symbol,
                                std::span<const double> h_prev, GruCell::Cache* cache) const {
  if (symbol >= alphabet_size_) throw std::out_of_range("symbol id out of range");
  Vec onehot(alphabet_size_, 0.0);
  onehot[symbol] = 1.0;
  return encoder_.forward(store, onehot, h_prev, cache);
}

Vec LearnedBackend::attention_weights(const ParamStore& store, const std::vector<Vec>& encoder_outputs,
                                      std::size_t read, std::span<const double> decoder_state) const {
  if (read == 0 || read > encoder_outputs.size()) throw std::domain_error("invalid buffer size");
  const Vec query = matvec(store.value(kQuery), decoder_state);
  Vec scores(read);
  for (std::size_t i = 0; i < read; ++i) scores[i] = dot(encoder_outputs[i], query);
  return softmax(scores);
}

Vec LearnedBackend::decoder_input(std::span<const double> context, std::span<const double> prev_frame,
                                  double end_weight) const {
  if (context.size() != cfg_.encoder_hidden || prev_frame.size() != frame_dim_) {
    throw std::domain_error("shape mismatch: decoder input");
  }
  const double end[1] = {end_weight};
  return concat({context, prev_frame, std::span<const double>(end, 1)});
}

namespace {

class LearnedSession final : public BackendSession {
 public:
  LearnedSession(const LearnedBackend& model, const Sentence& sentence, Mode mode)
      : BackendSession(sentence, mode),
        model_(&model),
        encoder_state_(model.hidden_dim(), 0.0),
        decoder_state_(model.decoder().spec().hidden, 0.0) {
    encoder_outputs_.push_back(encode_next());
  }

  std::unique_ptr<BackendSession> clone() const override {
    return std::unique_ptr<BackendSession>(new LearnedSession(*this));
  }

  bool finished() const override {
    if (mode() == Mode::kTrain) return frames_emitted() >= sentence().frame_count();
    return frames_emitted() > 0 && stop_probability_ > 0.5;
  }

 protected:
  Vec encode_next() override {
    encoder_state_ =
        model_->encode_step(model_->params(), sentence().symbols[encoder_outputs_.size()], encoder_state_);
    return encoder_state_;
  }

  Vec compute_attention() const override {
    return model_->attention_weights(model_->params(), encoder_outputs_, read_count(), decoder_state_);
  }

  Vec decode(std::span<const double> context, std::span<const double> prev_frame) override {
    const Vec& alpha = current_attention();
    const bool complete = read_count() == sentence().length();
    const Vec input = model_->decoder_input(context, prev_frame, complete ? alpha.back() : 0.0);
    const auto& params = model_->params();
    decoder_state_ = model_->decoder().forward(params, input, decoder_state_);
    const Vec head_in = concat({decoder_state_, context});
    Vec frame = model_->frame_head().forward(params, head_in);
    stop_probability_ = sigmoid(model_->stop_head().forward(params, decoder_state_)[0]);
    return frame;
  }

 private:
  LearnedSession(const LearnedSession&) = default;

  const LearnedBackend* model_;
  Vec encoder_state_;
  Vec decoder_state_;
  double stop_probability_ = 0.0;
};

}  // namespace

std::unique_ptr<BackendSession> LearnedBackend::reset(const Sentence& sentence, Mode mode) const {
  if (sentence.length() == 0) throw std::domain_error("empty sentence");
  if (sentence.frame_dim() != frame_dim_) throw std::domain_error("sentence frame dimension mismatch");
  return std::make_unique<LearnedSession>(*this, sentence, mode);
}

OfflineDecode LearnedBackend::decode_offline(const Sentence& sentence, Mode mode,
                                             std::size_t max_frames) const {
  if (sentence.length() == 0) throw std::domain_error("empty sentence");
  const std::size_t n = sentence.length();
  std::vector<Vec> h;
  Vec enc(cfg_.encoder_hidden, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    enc = encode_step(params_, sentence.symbols[i], enc);
    h.push_back(enc);
  }
  OfflineDecode out;
  Vec state(cfg_.decoder_hidden, 0.0);
  Vec prev(frame_dim_, 0.0);
  const std::size_t limit = mode == Mode::kTrain ? sentence.frame_count()
                                                 : (max_frames ? max_frames : 8 * n);
  for (std::size_t t = 0; t < limit; ++t) {
    const Vec alpha = attention_weights(params_, h, n, state);
    const Vec c = context_vector(h, alpha);
    state = decoder_.forward(params_, decoder_input(c, prev, alpha.back()), state);
    Vec frame = frame_head_.forward(params_, concat({state, c}));
    const double stop = sigmoid(stop_head_.forward(params_, state)[0]);
    if (mode == Mode::kTrain) {
      const auto gt = sentence.frame(t);
      prev.assign(gt.begin(), gt.end());
    } else {
      prev = frame;
    }
    out.frames.push_back(std::move(frame));
    out.alignments.push_back(alpha);
    out.stop_probabilities.push_back(stop);
    if (mode == Mode::kEval && stop > 0.5) break;
  }
  return out;
}

double LearnedBackend::loss(const Sentence& sentence, const ParamStore& store) const {
  return loss_impl(sentence, store, nullptr, 1.0);
}

double LearnedBackend::loss_and_grad(const Sentence& sentence, ParamStore& store, double weight) const {
  return loss_impl(sentence, store, &store, weight);
}

double LearnedBackend::loss_impl(const Sentence& sentence, const ParamStore& store,
                                 ParamStore* grads, double weight) const {
  const std::size_t n = sentence.length();
  const std::size_t frames = sentence.frame_count();
  const std::size_t he = cfg_.encoder_hidden;
  const std::size_t hd = cfg_.decoder_hidden;
  const std::size_t d = frame_dim_;
  const bool want_grad = grads != nullptr;

  std::vector<Vec> h;
  std::vector<GruCell::Cache> enc_cache(want_grad ? n : 0);
  Vec enc(he, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    enc = encode_step(store, sentence.symbols[i], enc, want_grad ? &enc_cache[i] : nullptr);
    h.push_back(enc);
  }

  struct StepCache {
    Vec state_prev, query, alpha, context, frame;
    GruCell::Cache gru;
    Mlp::Cache frame_head, stop_head;
    double stop_prob = 0.0;
  };
  std::vector<StepCache> steps(want_grad ? frames : 0);

  const double inv_t = 1.0 / static_cast<double>(frames);
  double total = 0.0;
  Vec state(hd, 0.0);
  Vec prev(d, 0.0);
  for (std::size_t t = 0; t < frames; ++t) {
    StepCache* sc = want_grad ? &steps[t] : nullptr;
    const Vec query = matvec(store.value(kQuery), state);
    Vec scores(n);
    for (std::size_t i = 0; i < n; ++i) scores[i] = dot(h[i], query);
    const Vec alpha = softmax(scores);
    const Vec c = context_vector(h, alpha);
    if (sc) {
      sc->state_prev = state;
      sc->query = query;
      sc->alpha = alpha;
      sc->context = c;
    }
    state = decoder_.forward(store, decoder_input(c, prev, alpha.back()), state,
                             sc ? &sc->gru : nullptr);
    Vec frame = frame_head_.forward(store, concat({state, c}), sc ? &sc->frame_head : nullptr);
    const double logit = stop_head_.forward(store, state, sc ? &sc->stop_head : nullptr)[0];
    const bool last = t + 1 == frames;
    total += inv_t * (mean_squared_error(frame, sentence.frame(t)) +
                      stop_target_loss(logit, last, cfg_.stop_positive_weight));
    if (sc) {
      sc->frame = std::move(frame);
      sc->stop_prob = sigmoid(logit);
    }
    const auto gt = sentence.frame(t);
    prev.assign(gt.begin(), gt.end());
  }
  if (!want_grad) return total;

  std::vector<Vec> dh(n, Vec(he, 0.0));
  Vec ds_next(hd, 0.0);
  for (std::size_t t = frames; t-- > 0;) {
    const StepCache& sc = steps[t];
    Vec ds = ds_next;
    Vec dc(he, 0.0);

    Vec dframe(d);
    const auto gt = sentence.frame(t);
    for (std::size_t k = 0; k < d; ++k) {
      dframe[k] = weight * inv_t * 2.0 * (sc.frame[k] - gt[k]) / static_cast<double>(d);
    }
    const Vec dhead = frame_head_.backward(*grads, sc.frame_head, dframe);
    for (std::size_t k = 0; k < hd; ++k) ds[k] += dhead[k];
    for (std::size_t k = 0; k < he; ++k) dc[k] += dhead[hd + k];

    const double dlogit =
        weight * inv_t * stop_target_grad(sc.stop_prob, t + 1 == frames, cfg_.stop_positive_weight);
    const Vec dstop = stop_head_.backward(*grads, sc.stop_head, std::span<const double>(&dlogit, 1));
    axpy(1.0, dstop, ds);

    const auto gru = decoder_.backward(*grads, sc.gru, ds);
    for (std::size_t k = 0; k < he; ++k) dc[k] += gru.x[k];
    const double dend = gru.x[he + d];

    Vec dalpha(n);
    for (std::size_t i = 0; i < n; ++i) {
      dalpha[i] = dot(dc, h[i]);
      axpy(sc.alpha[i], dc, dh[i]);
    }
    dalpha[n - 1] += dend;
    double inner = 0.0;
    for (std::size_t i = 0; i < n; ++i) inner += sc.alpha[i] * dalpha[i];
    Vec dq(he, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double dscore = sc.alpha[i] * (dalpha[i] - inner);
      axpy(dscore, h[i], dq);
      axpy(dscore, sc.query, dh[i]);
    }
    outer_acc(dq, sc.state_prev, grads->grad(kQuery));
    ds_next = gru.h_prev;
    matvec_transpose_acc(store.value(kQuery), dq, ds_next);
  }

  Vec dh_next(he, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    Vec g = dh[i];
    axpy(1.0, dh_next, g);
    dh_next = encoder_.backward(*grads, enc_cache[i], g).h_prev;
  }
  return total;
}

double LearnedBackend::frame_mse(const std::vector<const Sentence*>& sentences) const {
  if (sentences.empty()) return 0.0;
  double total = 0.0;
  for (const Sentence* s : sentences) {
    const OfflineDecode dec = decode_offline(*s, Mode::kTrain);
    double acc = 0.0;
    for (std::size_t t = 0; t < dec.frames.size(); ++t) acc += mean_squared_error(dec.frames[t], s->frame(t));
    total += acc / static_cast<double>(dec.frames.size());
  }
  return total / static_cast<double>(sentences.size());
}

LearnedBackend train_learned_backend(const Corpus& corpus, const LearnedBackendConfig& cfg,
                                     BackendTrainingResult* result) {
  cfg.validate();
  if (corpus.train_ids.empty()) throw std::invalid_argument("cannot train a backend on an empty corpus");
  LearnedBackend model(corpus.inventory.alphabet_size(), corpus.inventory.frame_dim, cfg);

  std::vector<std::size_t> fit = corpus.train_ids;
  std::vector<std::size_t> held;
  const auto n_val = static_cast<std::size_t>(std::floor(cfg.validation_fraction * fit.size()));
  if (n_val > 0 && n_val < fit.size()) {
    held.assign(fit.end() - static_cast<std::ptrdiff_t>(n_val), fit.end());
    fit.resize(fit.size() - n_val);
  } else {
    held = fit;
  }
  const auto validation = corpus.subset(held);

  std::mt19937_64 rng(cfg.seed ^ 0x5bd1e995ULL);
  const AdamConfig adam{cfg.learning_rate, 0.9, 0.999, 1e-8};
  ParamStore best = model.params();
  double best_mse = model.frame_mse(validation);
  std::size_t best_epoch = 0;
  std::size_t stale = 0;
  BackendTrainingResult local;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::shuffle(fit.begin(), fit.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < fit.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(fit.size(), start + cfg.batch_size);
      ParamStore& params = model.params();
      params.zero_grad();
      const double w = 1.0 / static_cast<double>(end - start);
      for (std::size_t k = start; k < end; ++k) {
        const double l = model.loss_and_grad(corpus.sentences.at(fit[k]), params, w);
        if (!std::isfinite(l)) {
          throw std::domain_error("backend training diverged: non-finite loss at epoch " +
                                  std::to_string(epoch));
        }
        epoch_loss += l;
      }
      adam_step(params, adam);
    }
    epoch_loss /= static_cast<double>(fit.size());
    const double val = model.frame_mse(validation);
    local.curve.push_back({epoch, epoch_loss, val});
    if (val < best_mse * (1.0 - cfg.min_improvement)) {
      best_mse = val;
      best = model.params();
      best_epoch = epoch;
      stale = 0;
    } else if (++stale >= cfg.patience) {
      break;
    }
  }
  local.best_epoch = best_epoch;
  local.best_validation_mse = best_mse;
  if (result) *result = std::move(local);
  best.zero_grad();
  return LearnedBackend(corpus.inventory.alphabet_size(), corpus.inventory.frame_dim, cfg,
                        std::move(best));
}

}  // namespace itts
