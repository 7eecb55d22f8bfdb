#include "itts/config.hpp"

#include <fstream>
#include <stdexcept>

using nlohmann::json;

namespace itts {

void EvalSettings::validate() const {
  if (split != "test" && split != "train" && split != "all") {
    throw std::invalid_argument("eval.split must be one of test|train|all, got '" + split + "'");
  }
}

void RunConfig::propagate_seed() {
  backend.seed = seed;
  agent.seed = seed;
}

void RunConfig::validate() const {
  corpus.validate();
  backend.validate();
  env.validate();
  agent.validate();
  eval.validate();
  if (env.reward.gamma != agent.gamma) {
    throw std::invalid_argument("reward.gamma and agent.gamma must agree");
  }
  if (out_dir.empty()) throw std::invalid_argument("out_dir must not be empty");
}

json to_json(const RunConfig& c) {
  const auto& r = c.env.reward;
  return json{
      {"seed", c.seed},
      {"out_dir", c.out_dir},
      {"corpus",
       {{"alphabet_size", c.corpus.alphabet_size},
        {"frame_dim", c.corpus.frame_dim},
        {"durations", c.corpus.durations},
        {"sensitive_fraction", c.corpus.sensitive_fraction},
        {"coarticulation", c.corpus.coarticulation},
        {"noise", c.corpus.noise},
        {"min_length", c.corpus.min_length},
        {"max_length", c.corpus.max_length},
        {"size", c.corpus.size},
        {"train_fraction", c.corpus.train_fraction},
        {"seed", c.corpus.seed}}},
      {"backend",
       {{"encoder_hidden", c.backend.encoder_hidden},
        {"decoder_hidden", c.backend.decoder_hidden},
        {"learning_rate", c.backend.learning_rate},
        {"batch_size", c.backend.batch_size},
        {"max_epochs", c.backend.max_epochs},
        {"patience", c.backend.patience},
        {"min_improvement", c.backend.min_improvement},
        {"stop_positive_weight", c.backend.stop_positive_weight},
        {"validation_fraction", c.backend.validation_fraction}}},
      {"reward",
       {{"omega", r.omega},
        {"beta", r.beta},
        {"lambda", r.lambda},
        {"c_star", r.c_star},
        {"d_star", r.d_star},
        {"gamma", r.gamma},
        {"unread_scale", r.unread_scale}}},
      {"env",
       {{"window", c.env.window},
        {"eval_max_frames_per_char", c.env.eval_max_frames_per_char},
        {"allow_zero_weights", c.env.allow_zero_weights}}},
      {"agent",
       {{"policy_hidden", c.agent.policy_hidden},
        {"policy_dense", c.agent.policy_dense},
        {"baseline_dense", c.agent.baseline_dense},
        {"gamma", c.agent.gamma},
        {"episodes_per_update", c.agent.episodes_per_update},
        {"learning_rate", c.agent.learning_rate},
        {"advantage_epsilon", c.agent.advantage_epsilon},
        {"selection", std::string(to_string(c.agent.selection))},
        {"max_grad_norm", c.agent.max_grad_norm},
        {"episodes", c.agent.episodes}}},
      {"eval",
       {{"mode", std::string(to_string(c.eval.mode))},
        {"split", c.eval.split},
        {"wait_k_read_on_first_step", c.eval.wait_k_read_on_first_step}}},
  };
}

namespace {

bool same_kind(const json& a, const json& b) {
  if (a.is_number() && b.is_number()) return true;
  return a.type() == b.type();
}

// Overlays `patch` onto `base`, refusing keys that `base` does not have.
void overlay(json& base, const json& patch, const std::string& path) {
  if (!patch.is_object()) throw std::invalid_argument("config " + (path.empty() ? "root" : path) + " must be an object");
  for (const auto& [key, value] : patch.items()) {
    const std::string where = path.empty() ? key : path + "." + key;
    if (!base.contains(key)) throw std::invalid_argument("unknown config key '" + where + "'");
    json& slot = base[key];
    if (slot.is_object()) {
      overlay(slot, value, where);
    } else {
      if (!same_kind(slot, value)) throw std::invalid_argument("config key '" + where + "' has the wrong type");
      slot = value;
    }
  }
}

template <typename T>
T field(const json& j, const char* section, const char* key) {
  try {
    return j.at(section).at(key).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument(std::string("config key '") + section + "." + key + "' has an invalid value");
  }
}

}  // namespace

RunConfig run_config_from_json(const json& patch) {
  json j = to_json(RunConfig{});
  overlay(j, patch, "");

  RunConfig c;
  try {
    c.seed = j.at("seed").get<std::uint64_t>();
    c.out_dir = j.at("out_dir").get<std::string>();
  } catch (const json::exception&) {
    throw std::invalid_argument("config keys 'seed'/'out_dir' have invalid values");
  }
  c.corpus.alphabet_size = field<std::size_t>(j, "corpus", "alphabet_size");
  c.corpus.frame_dim = field<std::size_t>(j, "corpus", "frame_dim");
  c.corpus.durations = field<std::vector<std::size_t>>(j, "corpus", "durations");
  c.corpus.sensitive_fraction = field<double>(j, "corpus", "sensitive_fraction");
  c.corpus.coarticulation = field<double>(j, "corpus", "coarticulation");
  c.corpus.noise = field<double>(j, "corpus", "noise");
  c.corpus.min_length = field<std::size_t>(j, "corpus", "min_length");
  c.corpus.max_length = field<std::size_t>(j, "corpus", "max_length");
  c.corpus.size = field<std::size_t>(j, "corpus", "size");
  c.corpus.train_fraction = field<double>(j, "corpus", "train_fraction");
  c.corpus.seed = field<std::uint64_t>(j, "corpus", "seed");

  c.backend.encoder_hidden = field<std::size_t>(j, "backend", "encoder_hidden");
  c.backend.decoder_hidden = field<std::size_t>(j, "backend", "decoder_hidden");
  c.backend.learning_rate = field<double>(j, "backend", "learning_rate");
  c.backend.batch_size = field<std::size_t>(j, "backend", "batch_size");
  c.backend.max_epochs = field<std::size_t>(j, "backend", "max_epochs");
  c.backend.patience = field<std::size_t>(j, "backend", "patience");
  c.backend.min_improvement = field<double>(j, "backend", "min_improvement");
  c.backend.stop_positive_weight = field<double>(j, "backend", "stop_positive_weight");
  c.backend.validation_fraction = field<double>(j, "backend", "validation_fraction");

  auto& r = c.env.reward;
  r.omega = field<double>(j, "reward", "omega");
  r.beta = field<double>(j, "reward", "beta");
  r.lambda = field<double>(j, "reward", "lambda");
  r.c_star = field<std::size_t>(j, "reward", "c_star");
  r.d_star = field<double>(j, "reward", "d_star");
  r.gamma = field<double>(j, "reward", "gamma");
  r.unread_scale = field<double>(j, "reward", "unread_scale");

  c.env.window = field<std::size_t>(j, "env", "window");
  c.env.eval_max_frames_per_char = field<std::size_t>(j, "env", "eval_max_frames_per_char");
  c.env.allow_zero_weights = field<bool>(j, "env", "allow_zero_weights");

  c.agent.policy_hidden = field<std::size_t>(j, "agent", "policy_hidden");
  c.agent.policy_dense = field<std::vector<std::size_t>>(j, "agent", "policy_dense");
  c.agent.baseline_dense = field<std::vector<std::size_t>>(j, "agent", "baseline_dense");
  c.agent.gamma = field<double>(j, "agent", "gamma");
  c.agent.episodes_per_update = field<std::size_t>(j, "agent", "episodes_per_update");
  c.agent.learning_rate = field<double>(j, "agent", "learning_rate");
  c.agent.advantage_epsilon = field<double>(j, "agent", "advantage_epsilon");
  c.agent.selection = selection_mode_from_string(field<std::string>(j, "agent", "selection"));
  c.agent.max_grad_norm = field<double>(j, "agent", "max_grad_norm");
  c.agent.episodes = field<std::size_t>(j, "agent", "episodes");

  c.eval.mode = mode_from_string(field<std::string>(j, "eval", "mode"));
  c.eval.split = field<std::string>(j, "eval", "split");
  c.eval.wait_k_read_on_first_step = field<bool>(j, "eval", "wait_k_read_on_first_step");

  c.propagate_seed();
  return c;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config '" + path + "': " + e.what());
  }
  return run_config_from_json(j);
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw std::invalid_argument("override '" + assignment + "' is not of the form key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  json patch = value;
  for (std::size_t end = key.size(); end != std::string::npos;) {
    const auto dot = key.rfind('.', end - 1);
    const std::string part = key.substr(dot == std::string::npos ? 0 : dot + 1,
                                        end - (dot == std::string::npos ? 0 : dot + 1));
    patch = json{{part, patch}};
    end = dot == std::string::npos || dot == 0 ? std::string::npos : dot;
  }
  json merged = to_json(cfg);
  overlay(merged, patch, "");
  cfg = run_config_from_json(merged);
}

}  // namespace itts
