#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "itts/policy.hpp"

namespace itts {

// READ while R < N, then SPEAK.
Action wue_policy(const EpisodeCounters& counters);

struct WaitKConfig {
  std::size_t k = 2;
  // false: the character consumed at reset fills the cycle's READ slot, so the
  // first decision is SPEAK. true: the first decision is READ.
  bool read_on_first_step = false;

  void validate() const;
};

// Cycle of one READ followed by k-1 SPEAKs. READ slots become SPEAK once the
// source is exhausted.
Action wks_policy(const EpisodeCounters& counters, const WaitKConfig& cfg, std::size_t step);

class WaitUntilEndPolicy final : public Policy {
 public:
  std::string name() const override { return "wue"; }
  Action act(const Observation&, const EpisodeCounters& counters, std::size_t) override {
    return wue_policy(counters);
  }
};

class WaitKStepsPolicy final : public Policy {
 public:
  explicit WaitKStepsPolicy(WaitKConfig cfg);
  std::string name() const override { return "w" + std::to_string(cfg_.k) + "s"; }
  Action act(const Observation&, const EpisodeCounters& counters, std::size_t step) override {
    return wks_policy(counters, cfg_, step);
  }

 private:
  WaitKConfig cfg_;
};

// Parses "wue" or "w<k>s" (k >= 2). Returns nullptr for anything else.
std::unique_ptr<Policy> make_rule_policy(std::string_view spec);

}  // namespace itts
