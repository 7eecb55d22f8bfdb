#pragma once

#include <memory>
#include <string>

#include "itts/backend.hpp"
#include "itts/corpus.hpp"
#include "itts/env.hpp"
#include "itts/learned_backend.hpp"
#include "itts/policy.hpp"

namespace itts::test {

struct OracleFixture {
  Corpus corpus;
  std::unique_ptr<OracleBackend> backend;
};

// A dozen short sentences (N in 3..6) on the default inventory.
OracleFixture small_oracle_fixture(std::uint64_t seed = 1);

// Two symbols, D = 2, both lasting two frames. Symbol 0 is lookahead-sensitive
// with coarticulation 0.5; symbol 1 is not.
SymbolInventory two_symbol_inventory();

// Default corpus (shared, generated once).
const Corpus& default_corpus();

// Learned backend trained on the default corpus with default settings
// (shared, trained once per process).
const LearnedBackend& trained_backend();

// Plays a fixed action list; falls back to SPEAK once it runs out.
class ScriptedPolicy final : public Policy {
 public:
  explicit ScriptedPolicy(std::vector<Action> actions) : actions_(std::move(actions)) {}
  std::string name() const override { return "scripted"; }
  Action act(const Observation&, const EpisodeCounters&, std::size_t step) override {
    return step < actions_.size() ? actions_[step] : Action::kSpeak;
  }

 private:
  std::vector<Action> actions_;
};

std::string temp_path(const std::string& name);
std::string read_file(const std::string& path);

}  // namespace itts::test
