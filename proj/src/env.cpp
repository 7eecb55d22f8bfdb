#include "itts/env.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace itts {

void RewardConfig::validate(bool allow_zero_weights) const {
  auto negative = [&](double v, const char* name) {
    const bool ok = allow_zero_weights ? v <= 0.0 : v < 0.0;
    if (!ok) throw std::invalid_argument(std::string("reward.") + name + " must be negative");
  };
  negative(omega, "omega");
  negative(beta, "beta");
  negative(lambda, "lambda");
  if (c_star < 1) throw std::invalid_argument("reward.c_star must be >= 1");
  if (!(d_star >= 0.0 && d_star <= 1.0)) throw std::invalid_argument("reward.d_star must lie in [0, 1]");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("reward.gamma must lie in [0, 1]");
  if (!(unread_scale >= 0.0)) throw std::invalid_argument("reward.unread_scale must be >= 0");
}

void EnvConfig::validate() const {
  reward.validate(allow_zero_weights);
  if (window < 1) throw std::invalid_argument("env.window must be >= 1");
  if (eval_max_frames_per_char < 1) throw std::invalid_argument("env.eval_max_frames_per_char must be >= 1");
}

std::uint64_t digest(const Observation& obs) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const Vec* part : {&obs.context, &obs.window, &obs.last_frame}) {
    for (double v : *part) {
      unsigned char bytes[sizeof(double)];
      std::memcpy(bytes, &v, sizeof(double));
      for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
      }
    }
  }
  return h;
}

double reward_consecutive_read(std::size_t consecutive_reads, const RewardConfig& cfg) {
  const auto c = static_cast<long long>(consecutive_reads);
  const auto target = static_cast<long long>(cfg.c_star);
  const double sgn = c > target ? 1.0 : (c < target ? -1.0 : 0.0);
  return cfg.omega * (sgn + 1.0);
}

double reward_area_penalty(double latency, const RewardConfig& cfg) {
  return cfg.beta * std::max(0.0, latency - cfg.d_star);
}

double reward_quality(std::span<const double> target, std::span<const double> generated,
                      Action action, const RewardConfig& cfg) {
  if (target.size() != generated.size()) throw std::domain_error("frame dimension mismatch");
  if (action == Action::kRead) return 0.0;
  return cfg.lambda * mean_squared_error(target, generated);
}

Vec attention_window(std::span<const double> alpha, std::size_t window) {
  Vec out(window, 0.0);
  const std::size_t n = std::min(window, alpha.size());
  for (std::size_t k = 0; k < n; ++k) out[window - n + k] = alpha[alpha.size() - n + k];
  return out;
}

double latency_from_reads(std::span<const std::size_t> read_before, std::size_t source_length) {
  if (read_before.empty()) throw std::domain_error("latency of a path with no frames (T = 0)");
  if (source_length == 0) throw std::domain_error("latency with an empty source");
  double area = 0.0;
  for (auto r : read_before) area += static_cast<double>(r);
  return area / (static_cast<double>(source_length) * static_cast<double>(read_before.size()));
}

Environment::Environment(const SynthesisBackend& backend, EnvConfig cfg)
    : backend_(&backend), cfg_(cfg) {
  cfg_.validate();
}

std::size_t Environment::observation_size() const {
  return backend_->hidden_dim() + cfg_.window + backend_->frame_dim();
}

Observation Environment::reset(const Sentence& sentence, Mode mode) {
  sentence_ = &sentence;
  mode_ = mode;
  session_ = backend_->reset(sentence, mode);
  counters_ = initial_counters(
      sentence.length(), mode == Mode::kTrain ? std::optional(sentence.frame_count()) : std::nullopt);
  done_ = false;
  discount_ = 1.0;
  read_before_.clear();
  generated_.clear();
  frame_quality_.clear();
  trace_ = EpisodeTrace{};
  trace_.sentence_id = sentence.id;
  trace_.mode = mode;
  return observe();
}

Observation Environment::observe() {
  const Vec& alpha = session_->attention();
  Observation obs;
  obs.context = context_vector(session_->encoder_outputs(), alpha);
  obs.window = attention_window(alpha, cfg_.window);
  const std::size_t s = counters_.spoken;
  if (s == 0) {
    obs.last_frame.assign(backend_->frame_dim(), 0.0);
  } else if (mode_ == Mode::kTrain) {
    const auto y = sentence_->frame(s - 1);
    obs.last_frame.assign(y.begin(), y.end());
  } else {
    obs.last_frame = generated_[s - 1];
  }
  return obs;
}

double Environment::speak_once() {
  const Vec& alpha = session_->attention();
  const Vec context = context_vector(session_->encoder_outputs(), alpha);
  const std::size_t s = counters_.spoken;
  Vec prev(backend_->frame_dim(), 0.0);
  if (s > 0) {
    if (mode_ == Mode::kTrain) {
      const auto y = sentence_->frame(s - 1);
      prev.assign(y.begin(), y.end());
    } else {
      prev = generated_[s - 1];
    }
  }
  Vec frame = session_->decode_frame(context, prev);
  read_before_.push_back(counters_.read);
  counters_ = apply_action(counters_, Action::kSpeak);
  double quality = 0.0;
  if (s < sentence_->frame_count()) {
    const double mse = mean_squared_error(sentence_->frame(s), frame);
    quality = cfg_.reward.lambda * mse;
    trace_.total_mse += mse;
    ++trace_.scored_frames;
  }
  generated_.push_back(std::move(frame));
  ++trace_.frames;
  return quality;
}

double Environment::finish_episode(RewardComponents& info) {
  const double latency = latency_from_reads(read_before_, sentence_->length());
  info.area_penalty = reward_area_penalty(latency, cfg_.reward);
  if (counters_.read < sentence_->length()) {
    info.unread_penalty =
        -static_cast<double>(sentence_->length() - counters_.read) * cfg_.reward.unread_scale;
  }
  trace_.latency = latency;
  return latency;
}

StepResult Environment::step(Action action) {
  if (done_) throw std::domain_error("step called on a terminal episode");
  StepRecord rec;
  rec.index = trace_.steps.size();
  rec.action = action;
  RewardComponents info;
  StepResult result;

  if (action == Action::kRead) {
    if (counters_.source_exhausted()) throw std::domain_error("source exhausted");
    session_->read();
    counters_ = apply_action(counters_, Action::kRead);
    info.consecutive_read = reward_consecutive_read(counters_.consecutive_reads, cfg_.reward);
    rec.alpha = session_->attention();
  } else {
    rec.alpha = session_->attention();
    const double q = speak_once();
    info.quality = q;
    rec.frame_quality.push_back(q);
  }

  bool terminal = false;
  if (mode_ == Mode::kTrain) {
    if (counters_.source_exhausted() && !counters_.target_exhausted()) {
      // Forced tail: each automatic SPEAK counts as one further virtual step.
      double discount = 1.0;
      while (!counters_.target_exhausted()) {
        discount *= cfg_.reward.gamma;
        rec.forced_alpha.push_back(session_->attention());
        const double q = speak_once();
        rec.frame_quality.push_back(q);
        info.quality += discount * q;
        ++result.forced_frames;
      }
      result.forced_tail = true;
    }
    terminal = counters_.target_exhausted();
  } else {
    const std::size_t cap = cfg_.eval_max_frames_per_char * sentence_->length();
    terminal = session_->finished() || counters_.spoken >= cap;
  }
  if (terminal) finish_episode(info);

  result.observation = observe();
  result.reward = info.total();
  result.terminal = terminal;
  result.info = info;

  rec.components = info;
  rec.reward = result.reward;
  rec.counters = counters_;
  rec.terminal = terminal;
  rec.observation_digest = digest(result.observation);
  trace_.discounted_return += discount_ * rec.reward;
  discount_ *= cfg_.reward.gamma;
  trace_.steps.push_back(std::move(rec));
  done_ = terminal;
  return result;
}

}  // namespace itts
