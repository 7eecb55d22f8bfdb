#include "itts/trace_io.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

using nlohmann::json;

namespace itts {

void write_trace(std::ostream& out, const EpisodeTrace& trace, std::size_t target_length) {
  const std::size_t n = trace.source_length();
  for (const auto& st : trace.steps) {
    json line{{"j", st.index},
              {"action", std::string(to_string(st.action))},
              {"r", st.reward},
              {"r_cr", st.components.consecutive_read},
              {"r_ap", st.components.area_penalty},
              {"r_q", st.components.quality},
              {"unread_penalty", st.components.unread_penalty},
              {"R", st.counters.read},
              {"S", st.counters.spoken},
              {"terminal", st.terminal},
              {"alpha", st.alpha},
              {"sentence", trace.sentence_id},
              {"mode", std::string(to_string(trace.mode))},
              {"N", n},
              {"T", target_length},
              {"c", st.counters.consecutive_reads},
              {"forced_alpha", st.forced_alpha},
              {"r_q_frames", st.frame_quality}};
    out << line.dump() << '\n';
  }
}

void write_trace_file(const std::string& path, const EpisodeTrace& trace, std::size_t target_length) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_trace(out, trace, target_length);
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

std::vector<std::size_t> frame_reads(const EpisodeTrace& trace) {
  std::vector<std::size_t> reads;
  const std::size_t n = trace.source_length();
  for (const auto& st : trace.steps) {
    if (st.action == Action::kSpeak) {
      // R is unchanged by a SPEAK; with a forced tail the recorded counters are
      // those after forcing, where R = N as well.
      reads.push_back(st.counters.read);
    }
    for (std::size_t k = 0; k < st.forced_alpha.size(); ++k) reads.push_back(n);
  }
  return reads;
}

namespace {

void finalize(StoredEpisode& ep, const RewardConfig& reward) {
  auto& t = ep.trace;
  t.discounted_return = discounted_sum(t.steps, reward.gamma);
  const auto reads = frame_reads(t);
  t.frames = reads.size();
  t.latency = reads.empty() ? 0.0 : latency_from_reads(reads, t.source_length());
  t.scored_frames = std::min(t.frames, ep.target_length);
  t.total_mse = 0.0;
  std::size_t f = 0;
  for (const auto& st : t.steps) {
    for (double q : st.frame_quality) {
      if (f++ < t.scored_frames && reward.lambda != 0.0) t.total_mse += q / reward.lambda;
    }
  }
}

}  // namespace

std::vector<StoredEpisode> read_traces(std::istream& in, const RewardConfig& reward) {
  std::vector<StoredEpisode> episodes;
  std::string text;
  for (std::size_t line_no = 1; std::getline(in, text); ++line_no) {
    if (text.empty()) continue;
    const std::string where = "trace line " + std::to_string(line_no) + ": ";
    try {
      const json j = json::parse(text);
      StepRecord st;
      st.index = j.at("j").get<std::size_t>();
      st.action = action_from_string(j.at("action").get<std::string>());
      st.reward = j.at("r").get<double>();
      st.components.consecutive_read = j.at("r_cr").get<double>();
      st.components.area_penalty = j.at("r_ap").get<double>();
      st.components.quality = j.at("r_q").get<double>();
      st.components.unread_penalty = j.at("unread_penalty").get<double>();
      st.terminal = j.at("terminal").get<bool>();
      st.alpha = j.at("alpha").get<std::vector<double>>();
      st.forced_alpha = j.at("forced_alpha").get<std::vector<std::vector<double>>>();
      st.frame_quality = j.at("r_q_frames").get<std::vector<double>>();
      const auto mode = mode_from_string(j.at("mode").get<std::string>());
      const auto target = j.at("T").get<std::size_t>();
      st.counters.read = j.at("R").get<std::size_t>();
      st.counters.spoken = j.at("S").get<std::size_t>();
      st.counters.consecutive_reads = j.at("c").get<std::size_t>();
      st.counters.source_length = j.at("N").get<std::size_t>();
      if (mode == Mode::kTrain) st.counters.target_frames = target;

      if (st.index == 0) {
        if (!episodes.empty()) finalize(episodes.back(), reward);
        StoredEpisode ep;
        ep.trace.sentence_id = j.at("sentence").get<std::size_t>();
        ep.trace.mode = mode;
        ep.target_length = target;
        episodes.push_back(std::move(ep));
      } else if (episodes.empty() || episodes.back().trace.steps.back().index + 1 != st.index) {
        throw std::runtime_error("step index " + std::to_string(st.index) + " is out of sequence");
      }
      episodes.back().trace.steps.push_back(std::move(st));
    } catch (const std::exception& e) {
      throw std::runtime_error(where + e.what());
    }
  }
  if (!episodes.empty()) finalize(episodes.back(), reward);
  return episodes;
}

std::vector<StoredEpisode> read_trace_file(const std::string& path, const RewardConfig& reward) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open trace '" + path + "'");
  return read_traces(in, reward);
}

}  // namespace itts
