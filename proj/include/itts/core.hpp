#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace itts {

enum class Action { kRead, kSpeak };

std::string_view to_string(Action a);
Action action_from_string(std::string_view s);

enum class Mode { kTrain, kEval };

std::string_view to_string(Mode m);
Mode mode_from_string(std::string_view s);

// R: characters read, S: frames emitted, consecutive_reads: c_j.
// target_frames is only meaningful in train mode (teacher forcing).
struct EpisodeCounters {
  std::size_t read = 1;
  std::size_t spoken = 0;
  std::size_t consecutive_reads = 0;
  std::size_t source_length = 0;
  std::optional<std::size_t> target_frames;

  bool source_exhausted() const { return read >= source_length; }
  bool target_exhausted() const { return target_frames && spoken >= *target_frames; }

  friend bool operator==(const EpisodeCounters&, const EpisodeCounters&) = default;
};

// Counters right after reset: the first character is already in the buffer.
EpisodeCounters initial_counters(std::size_t source_length,
                                 std::optional<std::size_t> target_frames);

// Pure READ/SPEAK bookkeeping. Throws std::domain_error("source exhausted")
// for READ at R = N.
EpisodeCounters apply_action(const EpisodeCounters& counters, Action a);

// Staircase of an episode. read_before[s-1] is the number of characters in the
// buffer when frame s was emitted.
struct PolicyPath {
  std::vector<Action> actions;
  std::vector<std::size_t> read_before;
  std::size_t source_length = 0;
};

// Builds the staircase from a complete action list that starts right after
// reset. target_frames bounds the SPEAK count when given (train mode).
PolicyPath policy_path(const std::vector<Action>& actions, std::size_t source_length,
                       std::optional<std::size_t> target_frames);

struct RewardComponents {
  double consecutive_read = 0.0;  // r_cr
  double area_penalty = 0.0;      // r_ap
  double quality = 0.0;           // r_q
  double unread_penalty = 0.0;

  double total() const { return consecutive_read + area_penalty + quality + unread_penalty; }
};

struct StepRecord {
  std::size_t index = 0;
  Action action = Action::kRead;
  double reward = 0.0;
  RewardComponents components;
  // Counters after the step, including any forced tail on the terminal step.
  EpisodeCounters counters;
  bool terminal = false;
  // SPEAK: attention row used for the emitted frame. READ: attention over the
  // enlarged buffer.
  std::vector<double> alpha;
  // Rows of frames emitted by the forced tail (terminal step only).
  std::vector<std::vector<double>> forced_alpha;
  // Undiscounted quality reward of every frame emitted during the step, in
  // emission order (own SPEAK first, then the forced tail).
  std::vector<double> frame_quality;
  // Hash of the observation returned after this step.
  std::uint64_t observation_digest = 0;
};

struct EpisodeTrace {
  std::size_t sentence_id = 0;
  Mode mode = Mode::kTrain;
  std::vector<StepRecord> steps;
  double discounted_return = 0.0;
  double latency = 0.0;     // d_T
  double total_mse = 0.0;        // sum of per-frame MSE over scored frames
  std::size_t frames = 0;        // frames emitted
  std::size_t scored_frames = 0; // frames with a ground-truth counterpart

  // Agent actions followed by the SPEAKs executed by the forced tail.
  std::vector<Action> full_actions() const;
  std::size_t source_length() const;
};

// Sum of gamma^j r_j over the trace's records.
double discounted_sum(const std::vector<StepRecord>& steps, double gamma);

// Checks step indices, the single trailing terminal record, and that replaying
// the actions reproduces every recorded counter snapshot. Returns an empty
// string when consistent, otherwise a description of the first violation.
std::string check_trace(const EpisodeTrace& trace, double gamma);

}  // namespace itts
