#include "itts/policy.hpp"

namespace itts {

EpisodeData run_episode(Environment& env, const Sentence& sentence, Mode mode, Policy& policy,
                        bool keep_observations) {
  EpisodeData data;
  Observation obs = env.reset(sentence, mode);
  policy.begin_episode();
  for (std::size_t step = 0; !env.done(); ++step) {
    const Action a = policy.act(obs, env.counters(), step);
    if (keep_observations) data.observations.push_back(obs.flat());
    StepResult res = env.step(a);
    data.actions.push_back(a);
    data.rewards.push_back(res.reward);
    obs = std::move(res.observation);
  }
  data.trace = env.trace();
  return data;
}

}  // namespace itts
