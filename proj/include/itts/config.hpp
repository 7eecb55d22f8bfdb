#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "itts/agent.hpp"
#include "itts/corpus.hpp"
#include "itts/env.hpp"
#include "itts/learned_backend.hpp"

namespace itts {

struct EvalSettings {
  // "train": teacher-forced, aligned MSE. "eval": free-running, unaligned MSE.
  Mode mode = Mode::kTrain;
  // "test", "train" or "all".
  std::string split = "test";
  bool wait_k_read_on_first_step = false;

  void validate() const;
};

// Everything a run needs. `seed` drives backend and agent training; the corpus
// keeps its own seed so that data stays fixed across training seeds.
struct RunConfig {
  SyntheticCorpusSpec corpus;
  LearnedBackendConfig backend;
  EnvConfig env;
  AgentConfig agent;
  EvalSettings eval;
  std::uint64_t seed = 0;
  std::string out_dir = "out";

  // Copies `seed` into the component configs that consume it.
  void propagate_seed();
  void validate() const;
};

nlohmann::json to_json(const RunConfig& cfg);
// Missing keys keep their defaults; unknown keys throw std::invalid_argument
// naming the offending path.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

// Applies "dotted.key=value" where value is JSON (bare words are taken as
// strings), e.g. "agent.learning_rate=3e-4" or "eval.split=train".
void apply_override(RunConfig& cfg, const std::string& assignment);

}  // namespace itts
