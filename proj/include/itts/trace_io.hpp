#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "itts/core.hpp"
#include "itts/env.hpp"

namespace itts {

// An episode as stored on disk, with the ground-truth frame count T of its
// sentence (needed to score eval-mode episodes).
struct StoredEpisode {
  EpisodeTrace trace;
  std::size_t target_length = 0;
};

// One JSON object per step record:
//   j, action, r, r_cr, r_ap, r_q, unread_penalty, R, S, terminal, alpha
// plus sentence, mode, N, T, c (consecutive reads), forced_alpha and
// r_q_frames (undiscounted quality reward of each frame emitted by the step).
void write_trace(std::ostream& out, const EpisodeTrace& trace, std::size_t target_length);
void write_trace_file(const std::string& path, const EpisodeTrace& trace, std::size_t target_length);

// Parses one or more consecutive episodes (a record with j = 0 starts a new
// one) and recomputes d_T, the discounted return and the MSE from the records.
// Throws std::runtime_error naming the line on malformed input.
std::vector<StoredEpisode> read_traces(std::istream& in, const RewardConfig& reward);
std::vector<StoredEpisode> read_trace_file(const std::string& path, const RewardConfig& reward);

// R_before(s) for every emitted frame, including the forced tail.
std::vector<std::size_t> frame_reads(const EpisodeTrace& trace);

}  // namespace itts
