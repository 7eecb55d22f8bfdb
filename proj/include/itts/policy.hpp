#pragma once

#include <memory>
#include <string>
#include <vector>

#include "itts/core.hpp"
#include "itts/env.hpp"

namespace itts {

// Anything that picks READ/SPEAK from the current observation.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual void begin_episode() {}
  // `step` is the zero-based index of the decision within the episode.
  virtual Action act(const Observation& obs, const EpisodeCounters& counters, std::size_t step) = 0;
};

struct EpisodeData {
  std::vector<Vec> observations;  // o_j, the input of decision j
  std::vector<Action> actions;
  std::vector<double> rewards;
  EpisodeTrace trace;
};

// Runs one full episode. Observations are kept only when requested.
EpisodeData run_episode(Environment& env, const Sentence& sentence, Mode mode, Policy& policy,
                        bool keep_observations = false);

}  // namespace itts
