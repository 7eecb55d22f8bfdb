#include "itts/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace itts {

double latency_d_T(const PolicyPath& path, std::size_t source_length, std::size_t target_frames) {
  if (target_frames == 0) throw std::domain_error("d_T is undefined for T = 0");
  if (path.read_before.size() != target_frames) {
    throw std::domain_error("policy path covers " + std::to_string(path.read_before.size()) +
                            " frames, expected " + std::to_string(target_frames));
  }
  return latency_from_reads(path.read_before, source_length);
}

double quality_mse(const Sentence& truth, const std::vector<Vec>& generated) {
  if (generated.size() != truth.frame_count()) {
    throw std::domain_error("frame count mismatch: generated " + std::to_string(generated.size()) +
                            ", ground truth " + std::to_string(truth.frame_count()));
  }
  return unaligned_mse(truth, generated);
}

double unaligned_mse(const Sentence& truth, const std::vector<Vec>& generated) {
  const std::size_t m = std::min(generated.size(), truth.frame_count());
  if (m == 0) throw std::domain_error("no frames to compare");
  double total = 0.0;
  for (std::size_t s = 0; s < m; ++s) total += mean_squared_error(truth.frame(s), generated[s]);
  return total / static_cast<double>(m);
}

double quality_mse_from_rewards(const EpisodeTrace& trace, double lambda) {
  if (lambda == 0.0) throw std::domain_error("quality weight is zero; MSE cannot be recovered");
  if (trace.scored_frames == 0) throw std::domain_error("trace has no scored frames");
  double total = 0.0;
  for (const auto& step : trace.steps) {
    for (double q : step.frame_quality) total += q;
  }
  return total / (lambda * static_cast<double>(trace.scored_frames));
}

double trace_mse(const EpisodeTrace& trace) {
  if (trace.scored_frames == 0) throw std::domain_error("trace has no scored frames");
  return trace.total_mse / static_cast<double>(trace.scored_frames);
}

EvalSummary summarize(const std::string& policy, std::uint64_t seed, const std::vector<EpisodeTrace>& traces) {
  if (traces.empty()) throw std::domain_error("cannot summarise zero episodes");
  EvalSummary s;
  s.policy = policy;
  s.seed = seed;
  s.episodes = traces.size();
  std::vector<double> latencies;
  for (const auto& t : traces) {
    latencies.push_back(t.latency);
    s.mean_d_T += t.latency;
    s.mean_mse += trace_mse(t);
    s.mean_return += t.discounted_return;
  }
  const double n = static_cast<double>(traces.size());
  s.mean_d_T /= n;
  s.mean_mse /= n;
  s.mean_return /= n;
  std::sort(latencies.begin(), latencies.end());
  const std::size_t mid = latencies.size() / 2;
  s.median_d_T = latencies.size() % 2 ? latencies[mid] : 0.5 * (latencies[mid - 1] + latencies[mid]);
  return s;
}

EvalResult evaluate_policy(Policy& policy, const std::vector<const Sentence*>& sentences,
                           const SynthesisBackend& backend, const EnvConfig& env_cfg, Mode mode,
                           std::uint64_t seed) {
  Environment env(backend, env_cfg);
  EvalResult result;
  for (const Sentence* s : sentences) {
    result.traces.push_back(run_episode(env, *s, mode, policy).trace);
  }
  result.summary = summarize(policy.name(), seed, result.traces);
  return result;
}

std::vector<EvalSummary> tradeoff_table(std::vector<EvalSummary> summaries) {
  std::stable_sort(summaries.begin(), summaries.end(),
                   [](const EvalSummary& a, const EvalSummary& b) { return a.mean_d_T > b.mean_d_T; });
  return summaries;
}

namespace {

constexpr const char* kHeader = "policy,seed,episodes,mean_d_T,median_d_T,mean_mse,mean_return";

std::string real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
T parse_number(const std::string& field, std::size_t line) {
  T value{};
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw std::runtime_error("summary CSV line " + std::to_string(line) + ": bad number '" + field + "'");
  }
  return value;
}

}  // namespace

void write_summary_csv(std::ostream& out, const std::vector<EvalSummary>& rows) {
  out << kHeader << '\n';
  for (const auto& r : rows) {
    if (r.policy.find_first_of(",\n\"") != std::string::npos) {
      throw std::invalid_argument("policy name '" + r.policy + "' cannot be written to CSV");
    }
    out << r.policy << ',' << r.seed << ',' << r.episodes << ',' << real(r.mean_d_T) << ','
        << real(r.median_d_T) << ',' << real(r.mean_mse) << ',' << real(r.mean_return) << '\n';
  }
}

std::vector<EvalSummary> read_summary_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kHeader) {
    throw std::runtime_error("summary CSV line 1: expected header '" + std::string(kHeader) + "'");
  }
  std::vector<EvalSummary> rows;
  for (std::size_t n = 2; std::getline(in, line); ++n) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    if (f.size() != 7) {
      throw std::runtime_error("summary CSV line " + std::to_string(n) + ": expected 7 fields");
    }
    EvalSummary r;
    r.policy = f[0];
    r.seed = parse_number<std::uint64_t>(f[1], n);
    r.episodes = parse_number<std::size_t>(f[2], n);
    r.mean_d_T = parse_number<double>(f[3], n);
    r.median_d_T = parse_number<double>(f[4], n);
    r.mean_mse = parse_number<double>(f[5], n);
    r.mean_return = parse_number<double>(f[6], n);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace itts
