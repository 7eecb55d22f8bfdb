#include "itts/commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <stdexcept>

#include "itts/baselines.hpp"
#include "itts/plot.hpp"
#include "itts/trace_io.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace itts {

namespace {

std::string real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void ensure_parent(const std::string& path) {
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

std::ofstream open_out(const std::string& path) {
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace

std::vector<const Sentence*> split_sentences(const Corpus& corpus, const std::string& split) {
  if (split == "train") return corpus.subset(corpus.train_ids);
  if (split == "test") return corpus.subset(corpus.test_ids);
  if (split == "all") {
    std::vector<const Sentence*> out;
    for (const auto& s : corpus.sentences) out.push_back(&s);
    return out;
  }
  throw std::invalid_argument("unknown split '" + split + "' (expected test|train|all)");
}

GenDataResult cmd_gen_data(const RunConfig& cfg, const std::string& out_path) {
  cfg.validate();
  const Corpus corpus = generate_corpus(cfg.corpus);
  ensure_parent(out_path);
  write_corpus(corpus, out_path);

  GenDataResult r;
  r.corpus_path = out_path;
  fs::path manifest = out_path;
  manifest.replace_extension(".manifest.json");
  r.manifest_path = manifest.string();
  r.train = corpus.train_ids.size();
  r.test = corpus.test_ids.size();
  const json doc{{"corpus", fs::path(out_path).filename().string()},
                 {"sentences", corpus.sentences.size()},
                 {"train", r.train},
                 {"test", r.test},
                 {"train_ids", corpus.train_ids},
                 {"test_ids", corpus.test_ids},
                 {"seed", cfg.corpus.seed}};
  auto out = open_out(r.manifest_path);
  out << doc.dump(1) << '\n';
  return r;
}

Checkpoint backend_checkpoint(const LearnedBackend& backend, const RunConfig& cfg) {
  Checkpoint c;
  c.component = "backend";
  c.params = select_params(backend.params(), "");
  c.config = json{{"run", to_json(cfg)},
                  {"alphabet_size", backend.alphabet_size()},
                  {"frame_dim", backend.frame_dim()}};
  c.seed = backend.config().seed;
  return c;
}

LearnedBackend backend_from_checkpoint(const Checkpoint& ckpt, const Corpus& corpus) {
  if (ckpt.component != "backend") throw std::runtime_error("not a backend checkpoint");
  const auto alphabet = ckpt.config.at("alphabet_size").get<std::size_t>();
  const auto frame_dim = ckpt.config.at("frame_dim").get<std::size_t>();
  if (alphabet != corpus.inventory.alphabet_size() || frame_dim != corpus.inventory.frame_dim) {
    throw std::runtime_error("backend checkpoint expects alphabet " + std::to_string(alphabet) + " and frame dim " +
                             std::to_string(frame_dim) + "; corpus has " +
                             std::to_string(corpus.inventory.alphabet_size()) + " and " +
                             std::to_string(corpus.inventory.frame_dim));
  }
  RunConfig run = run_config_from_json(ckpt.config.at("run"));
  run.backend.seed = ckpt.seed;
  return LearnedBackend(alphabet, frame_dim, run.backend, select_params(ckpt.params, ""));
}

std::unique_ptr<SynthesisBackend> make_backend(const std::string& spec, const Corpus& corpus) {
  if (spec == "oracle") return std::make_unique<OracleBackend>(corpus.inventory);
  return std::make_unique<LearnedBackend>(backend_from_checkpoint(load_checkpoint(spec, "backend"), corpus));
}

Checkpoint agent_checkpoint(const Agent& agent, const RunConfig& cfg, std::size_t observation_size,
                            const std::string& backend_name) {
  Checkpoint c;
  c.component = "agent";
  c.params = merge_params(agent.policy, agent.baseline);
  c.config = json{{"run", to_json(cfg)}, {"observation_size", observation_size}, {"backend", backend_name}};
  c.seed = agent.config.seed;
  return c;
}

Agent agent_from_checkpoint(const Checkpoint& ckpt, std::size_t observation_size) {
  if (ckpt.component != "agent") throw std::runtime_error("not an agent checkpoint");
  const auto stored = ckpt.config.at("observation_size").get<std::size_t>();
  if (stored != observation_size) {
    throw std::runtime_error("agent checkpoint was trained on observations of size " + std::to_string(stored) +
                             ", the environment produces " + std::to_string(observation_size));
  }
  RunConfig run = run_config_from_json(ckpt.config.at("run"));
  run.agent.seed = ckpt.seed;
  return Agent(observation_size, run.agent, select_params(ckpt.params, "policy."),
               select_params(ckpt.params, "baseline"));
}

BackendTrainingResult cmd_train_backend(const RunConfig& cfg, const std::string& corpus_path,
                                        const std::string& out_checkpoint, std::ostream* log) {
  cfg.validate();
  const Corpus corpus = read_corpus(corpus_path);
  BackendTrainingResult result;
  const LearnedBackend backend = train_learned_backend(corpus, cfg.backend, &result);
  ensure_parent(out_checkpoint);
  save_checkpoint(backend_checkpoint(backend, cfg), out_checkpoint);

  auto csv = open_out((fs::path(cfg.out_dir) / "backend_loss.csv").string());
  csv << "epoch,train_loss,validation_mse\n";
  for (const auto& row : result.curve) {
    csv << row.epoch << ',' << real(row.train_loss) << ',' << real(row.validation_mse) << '\n';
  }
  if (log) {
    *log << "backend: " << result.curve.size() << " epochs, best epoch " << result.best_epoch
         << ", validation MSE " << result.best_validation_mse << '\n';
  }
  return result;
}

TrainingResult cmd_train_agent(const RunConfig& cfg, const std::string& corpus_path, const std::string& backend_spec,
                               const std::string& out_checkpoint, std::ostream* log) {
  cfg.validate();
  const Corpus corpus = read_corpus(corpus_path);
  const auto backend = make_backend(backend_spec, corpus);
  const std::size_t obs = Environment(*backend, cfg.env).observation_size();
  Agent agent(obs, cfg.agent);

  auto csv = open_out((fs::path(cfg.out_dir) / "agent_curve.csv").string());
  csv << "batch,mean_return,mean_latency,mean_mse\n";
  const TrainingResult result =
      train_agent(agent, *backend, cfg.env, corpus.subset(corpus.train_ids), [&](const TrainingRow& row) {
        csv << row.batch << ',' << real(row.mean_return) << ',' << real(row.mean_latency) << ','
            << real(row.mean_mse) << '\n';
        if (log && (row.batch + 1) % 50 == 0) {
          *log << "batch " << row.batch + 1 << ": return " << row.mean_return << ", d_T " << row.mean_latency
               << ", MSE " << row.mean_mse << '\n';
        }
      });
  ensure_parent(out_checkpoint);
  save_checkpoint(agent_checkpoint(agent, cfg, obs, backend->name()), out_checkpoint);
  return result;
}

std::vector<EvalSummary> cmd_eval(const RunConfig& cfg, const std::string& corpus_path,
                                  const std::vector<std::string>& policies, const std::string& agent_ckpt,
                                  const std::string& backend_spec) {
  cfg.validate();
  if (policies.empty()) throw std::invalid_argument("no policy given (valid: wue, w<k>s with k >= 2, agent)");
  const Corpus corpus = read_corpus(corpus_path);
  const auto backend = make_backend(backend_spec, corpus);
  const auto sentences = split_sentences(corpus, cfg.eval.split);
  const std::size_t obs = Environment(*backend, cfg.env).observation_size();

  std::vector<EvalSummary> rows;
  for (const auto& spec : policies) {
    std::unique_ptr<Agent> agent;
    std::unique_ptr<Policy> policy;
    if (spec == "agent") {
      if (agent_ckpt.empty()) throw std::invalid_argument("policy 'agent' needs an agent checkpoint");
      agent = std::make_unique<Agent>(agent_from_checkpoint(load_checkpoint(agent_ckpt, "agent"), obs));
      policy = std::make_unique<LearnedPolicy>(*agent, SelectionMode::kGreedy, cfg.seed);
    } else if (spec.size() > 1 && spec.front() == 'w' && spec != "wue") {
      policy = make_rule_policy(spec);
      if (policy) {
        const std::size_t k = std::stoul(spec.substr(1, spec.size() - 2));
        policy = std::make_unique<WaitKStepsPolicy>(WaitKConfig{k, cfg.eval.wait_k_read_on_first_step});
      }
    } else {
      policy = make_rule_policy(spec);
    }
    if (!policy) {
      throw std::invalid_argument("unknown policy '" + spec + "' (valid: wue, w<k>s with k >= 2, agent)");
    }
    const EvalResult result = evaluate_policy(*policy, sentences, *backend, cfg.env, cfg.eval.mode, cfg.seed);
    const fs::path dir = fs::path(cfg.out_dir) / "traces" / spec;
    fs::create_directories(dir);
    for (std::size_t k = 0; k < result.traces.size(); ++k) {
      write_trace_file((dir / (std::to_string(sentences[k]->id) + ".ndjson")).string(), result.traces[k],
                       sentences[k]->frame_count());
    }
    rows.push_back(result.summary);
  }
  rows = tradeoff_table(std::move(rows));
  const std::string name = cfg.eval.mode == Mode::kTrain ? "summary.csv" : "summary_unaligned.csv";
  auto csv = open_out((fs::path(cfg.out_dir) / name).string());
  write_summary_csv(csv, rows);
  return rows;
}

void cmd_plot(const RunConfig& cfg, const std::string& kind, const std::string& input, const std::string& out) {
  std::string svg;
  if (kind == "path") {
    const auto episodes = read_trace_file(input, cfg.env.reward);
    if (episodes.empty()) throw std::runtime_error("trace '" + input + "' holds no episode");
    const auto& t = episodes.front().trace;
    svg = path_plot_svg(path_plot_data(t), "sentence " + std::to_string(t.sentence_id) + ", d_T " +
                                               real(t.latency).substr(0, 6));
  } else if (kind == "tradeoff") {
    std::ifstream in(input, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open summary '" + input + "'");
    svg = tradeoff_svg(read_summary_csv(in), "MSE vs latency");
  } else {
    throw std::invalid_argument("unknown plot kind '" + kind + "' (expected path|tradeoff)");
  }
  ensure_parent(out);
  write_text_file(out, svg);
}

}  // namespace itts
