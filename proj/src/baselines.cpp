#include "itts/baselines.hpp"

#include <charconv>
#include <stdexcept>

namespace itts {

Action wue_policy(const EpisodeCounters& counters) {
  return counters.source_exhausted() ? Action::kSpeak : Action::kRead;
}

void WaitKConfig::validate() const {
  if (k < 2) throw std::invalid_argument("wait-k policies need k >= 2");
}

Action wks_policy(const EpisodeCounters& counters, const WaitKConfig& cfg, std::size_t step) {
  const std::size_t slot = cfg.read_on_first_step ? step % cfg.k : (step + 1) % cfg.k;
  if (slot == 0 && !counters.source_exhausted()) return Action::kRead;
  return Action::kSpeak;
}

WaitKStepsPolicy::WaitKStepsPolicy(WaitKConfig cfg) : cfg_(cfg) { cfg_.validate(); }

std::unique_ptr<Policy> make_rule_policy(std::string_view spec) {
  if (spec == "wue") return std::make_unique<WaitUntilEndPolicy>();
  if (spec.size() >= 3 && spec.front() == 'w' && spec.back() == 's') {
    const std::string_view digits = spec.substr(1, spec.size() - 2);
    std::size_t k = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), k);
    if (ec == std::errc() && ptr == digits.data() + digits.size() && k >= 2) {
      return std::make_unique<WaitKStepsPolicy>(WaitKConfig{k, false});
    }
  }
  return nullptr;
}

}  // namespace itts
