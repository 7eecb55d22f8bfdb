#include "itts/core.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace itts {

std::string_view to_string(Action a) { return a == Action::kRead ? "READ" : "SPEAK"; }

Action action_from_string(std::string_view s) {
  if (s == "READ") return Action::kRead;
  if (s == "SPEAK") return Action::kSpeak;
  throw std::invalid_argument("unknown action '" + std::string(s) + "'");
}

std::string_view to_string(Mode m) { return m == Mode::kTrain ? "train" : "eval"; }

Mode mode_from_string(std::string_view s) {
  if (s == "train") return Mode::kTrain;
  if (s == "eval") return Mode::kEval;
  throw std::invalid_argument("unknown mode '" + std::string(s) + "' (expected train|eval)");
}

EpisodeCounters initial_counters(std::size_t source_length,
                                 std::optional<std::size_t> target_frames) {
  if (source_length == 0) throw std::domain_error("empty source sequence");
  EpisodeCounters c;
  c.read = 1;
  c.spoken = 0;
  c.consecutive_reads = 0;
  c.source_length = source_length;
  c.target_frames = target_frames;
  return c;
}

EpisodeCounters apply_action(const EpisodeCounters& counters, Action a) {
  EpisodeCounters next = counters;
  if (a == Action::kRead) {
    if (counters.read >= counters.source_length) throw std::domain_error("source exhausted");
    ++next.read;
    ++next.consecutive_reads;
  } else {
    ++next.spoken;
    next.consecutive_reads = 0;
  }
  return next;
}

PolicyPath policy_path(const std::vector<Action>& actions, std::size_t source_length,
                       std::optional<std::size_t> target_frames) {
  if (source_length == 0) throw std::domain_error("SPEAK before any character is available");
  PolicyPath path;
  path.actions = actions;
  path.source_length = source_length;
  std::size_t read = 1;
  for (std::size_t j = 0; j < actions.size(); ++j) {
    if (actions[j] == Action::kRead) {
      if (read >= source_length) {
        throw std::domain_error("malformed path: READ at step " + std::to_string(j) +
                                " with source exhausted");
      }
      if (target_frames && path.read_before.size() >= *target_frames) {
        throw std::domain_error("malformed path: READ at step " + std::to_string(j) +
                                " after all target frames were emitted");
      }
      ++read;
    } else {
      if (target_frames && path.read_before.size() >= *target_frames) {
        throw std::domain_error("malformed path: SPEAK at step " + std::to_string(j) +
                                " beyond the target frame count");
      }
      path.read_before.push_back(read);
    }
  }
  return path;
}

std::vector<Action> EpisodeTrace::full_actions() const {
  std::vector<Action> out;
  out.reserve(steps.size());
  std::size_t spoken = 0;
  for (const auto& step : steps) {
    out.push_back(step.action);
    if (step.action == Action::kSpeak) ++spoken;
    if (step.terminal) {
      for (; spoken < step.counters.spoken; ++spoken) out.push_back(Action::kSpeak);
    }
  }
  return out;
}

std::size_t EpisodeTrace::source_length() const {
  return steps.empty() ? 0 : steps.front().counters.source_length;
}

double discounted_sum(const std::vector<StepRecord>& steps, double gamma) {
  double total = 0.0;
  double discount = 1.0;
  for (const auto& step : steps) {
    total += discount * step.reward;
    discount *= gamma;
  }
  return total;
}

std::string check_trace(const EpisodeTrace& trace, double gamma) {
  std::ostringstream err;
  if (trace.steps.empty()) return "empty trace";
  const auto& first = trace.steps.front().counters;
  EpisodeCounters replay = initial_counters(first.source_length, first.target_frames);
  for (std::size_t j = 0; j < trace.steps.size(); ++j) {
    const auto& step = trace.steps[j];
    if (step.index != j) {
      err << "non-contiguous step index " << step.index << " at position " << j;
      return err.str();
    }
    const bool last = j + 1 == trace.steps.size();
    if (step.terminal != last) {
      err << "terminal flag " << step.terminal << " at step " << j;
      return err.str();
    }
    replay = apply_action(replay, step.action);
    if (last && step.counters.spoken > replay.spoken) {
      if (!replay.source_exhausted()) return "forced tail without an exhausted source";
      while (replay.spoken < step.counters.spoken) replay = apply_action(replay, Action::kSpeak);
    }
    if (!(replay == step.counters)) {
      err << "counter mismatch at step " << j << ": replay R=" << replay.read
          << " S=" << replay.spoken << " c=" << replay.consecutive_reads
          << ", recorded R=" << step.counters.read << " S=" << step.counters.spoken
          << " c=" << step.counters.consecutive_reads;
      return err.str();
    }
    if (std::abs(step.reward - step.components.total()) > 1e-12) {
      err << "reward decomposition mismatch at step " << j;
      return err.str();
    }
  }
  if (std::abs(discounted_sum(trace.steps, gamma) - trace.discounted_return) > 1e-9) {
    return "discounted return mismatch";
  }
  return {};
}

}  // namespace itts
