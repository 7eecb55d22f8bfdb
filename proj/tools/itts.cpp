// itts: data generation, training, evaluation and plotting for the
// incremental TTS READ/SPEAK agent.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "itts/commands.hpp"

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"Incremental TTS policy learning"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "training seed (overrides the config)");
  app.add_option("--out-dir", out_dir, "output directory (overrides the config)");
  app.add_option("--set", overrides, "override a config value, e.g. agent.learning_rate=3e-4");

  std::string corpus, out, backend = "oracle", agent_ckpt, kind, input;
  std::vector<std::string> policies;

  auto* gen = app.add_subcommand("gen-data", "generate the synthetic corpus");
  gen->add_option("--out", out, "corpus file (default <out-dir>/corpus.ndjson)");

  auto* tb = app.add_subcommand("train-backend", "train the learned synthesis backend");
  tb->add_option("--corpus", corpus, "corpus file")->required();
  tb->add_option("--out", out, "checkpoint (default <out-dir>/backend.ckpt.json)");

  auto* ta = app.add_subcommand("train-agent", "train the READ/SPEAK agent with REINFORCE");
  ta->add_option("--corpus", corpus, "corpus file")->required();
  ta->add_option("--backend", backend, "\"oracle\" or a backend checkpoint");
  ta->add_option("--out", out, "checkpoint (default <out-dir>/agent.ckpt.json)");

  auto* ev = app.add_subcommand("eval", "evaluate policies and write traces and the trade-off table");
  ev->add_option("--corpus", corpus, "corpus file")->required();
  ev->add_option("--policy", policies, "wue, w<k>s or agent; repeatable")->required();
  ev->add_option("--agent", agent_ckpt, "agent checkpoint (for --policy agent)");
  ev->add_option("--backend", backend, "\"oracle\" or a backend checkpoint");

  auto* pl = app.add_subcommand("plot", "render an SVG figure");
  pl->add_option("--kind", kind, "path or tradeoff")->required()->check(CLI::IsMember({"path", "tradeoff"}));
  pl->add_option("--input", input, "trace file (path) or summary CSV (tradeoff)")->required();
  pl->add_option("--out", out, "SVG file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    itts::RunConfig cfg = config_path.empty() ? itts::RunConfig{} : itts::load_run_config(config_path);
    for (const auto& o : overrides) itts::apply_override(cfg, o);
    if (seed) {
      cfg.seed = *seed;
      cfg.propagate_seed();
    }
    if (out_dir) cfg.out_dir = *out_dir;
    cfg.validate();
    const auto in_out_dir = [&](const char* name) { return (fs::path(cfg.out_dir) / name).string(); };

    if (gen->parsed()) {
      const auto r = itts::cmd_gen_data(cfg, out.empty() ? in_out_dir("corpus.ndjson") : out);
      std::cout << "wrote " << r.corpus_path << " (" << r.train << " train, " << r.test << " test) and "
                << r.manifest_path << '\n';
    } else if (tb->parsed()) {
      const std::string path = out.empty() ? in_out_dir("backend.ckpt.json") : out;
      itts::cmd_train_backend(cfg, corpus, path, &std::cerr);
      std::cout << "wrote " << path << '\n';
    } else if (ta->parsed()) {
      const std::string path = out.empty() ? in_out_dir("agent.ckpt.json") : out;
      itts::cmd_train_agent(cfg, corpus, backend, path, &std::cerr);
      std::cout << "wrote " << path << '\n';
    } else if (ev->parsed()) {
      for (const auto& row : itts::cmd_eval(cfg, corpus, policies, agent_ckpt, backend)) {
        std::cout << row.policy << ": d_T " << row.mean_d_T << " (median " << row.median_d_T << "), MSE "
                  << row.mean_mse << ", return " << row.mean_return << " over " << row.episodes << " episodes\n";
      }
    } else if (pl->parsed()) {
      itts::cmd_plot(cfg, kind, input, out);
      std::cout << "wrote " << out << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
