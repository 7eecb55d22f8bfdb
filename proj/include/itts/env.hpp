#pragma once

#include <memory>
#include <span>
#include <vector>

#include "itts/backend.hpp"
#include "itts/core.hpp"

namespace itts {

struct RewardConfig {
  double omega = -1.0;    // consecutive-read weight
  double beta = -10.0;    // area-penalty weight
  double lambda = -100.0; // quality weight
  std::size_t c_star = 4; // acceptable consecutive reads
  double d_star = 0.5;    // target area proportion
  double gamma = 0.99;
  double unread_scale = 1.0;

  // Throws std::invalid_argument when a documented range is violated.
  // `allow_zero_weights` admits omega/beta/lambda == 0 for ablation runs.
  void validate(bool allow_zero_weights = false) const;
};

struct EnvConfig {
  RewardConfig reward;
  std::size_t window = 5;
  // Eval-mode safety cap on emitted frames, per source character.
  std::size_t eval_max_frames_per_char = 8;
  bool allow_zero_weights = false;

  void validate() const;
};

struct Observation {
  Vec context;
  Vec window;
  Vec last_frame;

  std::size_t size() const { return context.size() + window.size() + last_frame.size(); }
  Vec flat() const { return concat({context, window, last_frame}); }
};

std::uint64_t digest(const Observation& obs);

struct StepResult {
  Observation observation;
  double reward = 0.0;
  bool terminal = false;
  RewardComponents info;
  bool forced_tail = false;
  std::size_t forced_frames = 0;
};

// r_cr = omega * (sgn(c_j - c*) + 1), with sgn(0) = 0.
double reward_consecutive_read(std::size_t consecutive_reads, const RewardConfig& cfg);
// r_ap = beta * max(0, d_T - d*).
double reward_area_penalty(double latency, const RewardConfig& cfg);
// SPEAK: lambda * MSE(target, generated); READ: 0.
double reward_quality(std::span<const double> target, std::span<const double> generated,
                      Action action, const RewardConfig& cfg);

// Trailing `window` attention weights ending at column R, zero-padded in front.
Vec attention_window(std::span<const double> alpha, std::size_t window);

// d_T = sum_s R_before(s) / (N * frames).
double latency_from_reads(std::span<const std::size_t> read_before, std::size_t source_length);

// Wraps a backend session for one episode at a time.
//
// Train mode follows teacher forcing: the previous ground-truth frame feeds the
// decoder and the observation, and the episode ends either when the buffer is
// complete (the remaining frames are spoken automatically and their discounted
// quality rewards folded into the terminal step) or when every target frame has
// been emitted (unread characters are penalised). Eval mode ends on the
// backend's stop criterion. The area penalty is applied on every terminal step.
class Environment {
 public:
  Environment(const SynthesisBackend& backend, EnvConfig cfg);

  const EnvConfig& config() const { return cfg_; }
  std::size_t observation_size() const;

  Observation reset(const Sentence& sentence, Mode mode);
  StepResult step(Action action);

  bool done() const { return done_; }
  const EpisodeCounters& counters() const { return counters_; }
  const Sentence& sentence() const { return *sentence_; }
  const BackendSession& session() const { return *session_; }
  // Trace of the episode so far.
  const EpisodeTrace& trace() const { return trace_; }
  const std::vector<std::size_t>& read_before() const { return read_before_; }
  const std::vector<Vec>& generated_frames() const { return generated_; }

 private:
  Observation observe();
  // Emits one frame; returns its undiscounted quality reward.
  double speak_once();
  double finish_episode(RewardComponents& info);

  const SynthesisBackend* backend_;
  EnvConfig cfg_;
  const Sentence* sentence_ = nullptr;
  Mode mode_ = Mode::kTrain;
  std::unique_ptr<BackendSession> session_;
  EpisodeCounters counters_;
  bool done_ = true;
  double discount_ = 1.0;
  std::vector<std::size_t> read_before_;
  std::vector<Vec> generated_;
  std::vector<double> frame_quality_;
  EpisodeTrace trace_;
};

}  // namespace itts
