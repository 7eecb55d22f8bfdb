#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "itts/core.hpp"
#include "itts/corpus.hpp"
#include "itts/env.hpp"
#include "itts/policy.hpp"

namespace itts {

// d_T = sum_s R_before(s) / (N * T). Throws std::domain_error for T = 0 or a
// path whose staircase does not cover exactly T frames.
double latency_d_T(const PolicyPath& path, std::size_t source_length, std::size_t target_frames);

// Mean over frames of the per-element MSE, frame s of `generated` against
// ground-truth frame s. Throws std::domain_error unless both have T frames.
double quality_mse(const Sentence& truth, const std::vector<Vec>& generated);

// Free-running variant: compares the first min(T_emitted, T) frames only.
double unaligned_mse(const Sentence& truth, const std::vector<Vec>& generated);

// Mean per-frame MSE recovered from the undiscounted quality rewards of a
// trace: sum(r_q) / (lambda * frames scored).
double quality_mse_from_rewards(const EpisodeTrace& trace, double lambda);

// Per-frame MSE recorded by the environment for one episode.
double trace_mse(const EpisodeTrace& trace);

struct EvalSummary {
  std::string policy;
  std::uint64_t seed = 0;
  std::size_t episodes = 0;
  double mean_d_T = 0.0;
  double median_d_T = 0.0;
  double mean_mse = 0.0;
  double mean_return = 0.0;

  friend bool operator==(const EvalSummary&, const EvalSummary&) = default;
};

// Aggregates stored traces. Throws std::domain_error on an empty list.
EvalSummary summarize(const std::string& policy, std::uint64_t seed, const std::vector<EpisodeTrace>& traces);

struct EvalResult {
  EvalSummary summary;
  std::vector<EpisodeTrace> traces;
};

// Runs `policy` once on every sentence. Train mode gives the teacher-forced
// aligned MSE; eval mode gives the free-running, unaligned one.
EvalResult evaluate_policy(Policy& policy, const std::vector<const Sentence*>& sentences,
                           const SynthesisBackend& backend, const EnvConfig& env_cfg, Mode mode,
                           std::uint64_t seed);

// Rows ordered by mean d_T, highest first (ties keep their input order).
std::vector<EvalSummary> tradeoff_table(std::vector<EvalSummary> summaries);

// Columns: policy,seed,episodes,mean_d_T,median_d_T,mean_mse,mean_return.
// Reals are written with 17 significant digits so reading back is lossless.
void write_summary_csv(std::ostream& out, const std::vector<EvalSummary>& rows);
std::vector<EvalSummary> read_summary_csv(std::istream& in);

}  // namespace itts
