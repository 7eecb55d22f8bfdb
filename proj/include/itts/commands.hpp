#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "itts/agent.hpp"
#include "itts/checkpoint.hpp"
#include "itts/config.hpp"
#include "itts/learned_backend.hpp"
#include "itts/metrics.hpp"

namespace itts {

// Subcommand bodies shared by the itts executable and the tests. Each one is
// deterministic for a given configuration and seed. `log` receives progress
// lines when non-null.

struct GenDataResult {
  std::string corpus_path;
  std::string manifest_path;
  std::size_t train = 0;
  std::size_t test = 0;
};

// Writes the corpus and, next to it, <stem>.manifest.json with counts and
// split ids.
GenDataResult cmd_gen_data(const RunConfig& cfg, const std::string& out_path);

// Trains the learned backend, writes its checkpoint and <out_dir>/backend_loss.csv.
BackendTrainingResult cmd_train_backend(const RunConfig& cfg, const std::string& corpus_path,
                                        const std::string& out_checkpoint, std::ostream* log = nullptr);

// `backend` is "oracle" or a backend checkpoint path. Writes the agent
// checkpoint and <out_dir>/agent_curve.csv (one row per update batch).
TrainingResult cmd_train_agent(const RunConfig& cfg, const std::string& corpus_path, const std::string& backend,
                               const std::string& out_checkpoint, std::ostream* log = nullptr);

// Evaluates each policy spec ("wue", "w<k>s" or "agent") on the configured
// split. Writes <out_dir>/traces/<policy>/<sentence id>.ndjson and the
// trade-off table to <out_dir>/summary.csv (summary_unaligned.csv for
// free-running evaluation). "agent" needs `agent_checkpoint`.
std::vector<EvalSummary> cmd_eval(const RunConfig& cfg, const std::string& corpus_path,
                                  const std::vector<std::string>& policies, const std::string& agent_checkpoint,
                                  const std::string& backend);

// kind "path": one trace file in, policy-path SVG out (first episode of the
// file). kind "tradeoff": summary CSV in, scatter SVG out.
void cmd_plot(const RunConfig& cfg, const std::string& kind, const std::string& input, const std::string& out);

std::unique_ptr<SynthesisBackend> make_backend(const std::string& spec, const Corpus& corpus);

Checkpoint agent_checkpoint(const Agent& agent, const RunConfig& cfg, std::size_t observation_size,
                            const std::string& backend_name);
// Rebuilds the agent described by the checkpoint; throws when its layout does
// not match `observation_size`.
Agent agent_from_checkpoint(const Checkpoint& ckpt, std::size_t observation_size);

Checkpoint backend_checkpoint(const LearnedBackend& backend, const RunConfig& cfg);
LearnedBackend backend_from_checkpoint(const Checkpoint& ckpt, const Corpus& corpus);

std::vector<const Sentence*> split_sentences(const Corpus& corpus, const std::string& split);

}  // namespace itts
