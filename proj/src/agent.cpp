#include "itts/agent.hpp"

#include <cmath>
#include <iostream>
#include <numeric>
#include <stdexcept>

namespace itts {

std::string_view to_string(SelectionMode m) { return m == SelectionMode::kSample ? "sample" : "greedy"; }

SelectionMode selection_mode_from_string(std::string_view s) {
  if (s == "sample") return SelectionMode::kSample;
  if (s == "greedy") return SelectionMode::kGreedy;
  throw std::invalid_argument("unknown action-selection mode '" + std::string(s) +
                              "' (expected sample|greedy)");
}

void AgentConfig::validate() const {
  if (policy_hidden == 0) throw std::invalid_argument("agent.policy_hidden must be positive");
  if (policy_dense.size() != 2) throw std::invalid_argument("agent.policy_dense must list 2 layer sizes");
  if (baseline_dense.size() != 2) throw std::invalid_argument("agent.baseline_dense must list 2 hidden sizes");
  for (auto n : policy_dense) {
    if (n == 0) throw std::invalid_argument("agent.policy_dense sizes must be positive");
  }
  for (auto n : baseline_dense) {
    if (n == 0) throw std::invalid_argument("agent.baseline_dense sizes must be positive");
  }
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("agent.gamma must lie in [0, 1]");
  if (episodes_per_update < 1) throw std::invalid_argument("agent.episodes_per_update must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("agent.learning_rate must be > 0");
  if (!(advantage_epsilon >= 0.0)) throw std::invalid_argument("agent.advantage_epsilon must be >= 0");
  if (!(max_grad_norm >= 0.0)) throw std::invalid_argument("agent.max_grad_norm must be >= 0");
}

// ---------------------------------------------------------------------------

namespace {

MlpSpec policy_head_spec(const AgentConfig& cfg) {
  return MlpSpec{cfg.policy_hidden,
                 {{cfg.policy_dense[0], Activation::kRelu},
                  {cfg.policy_dense[1], Activation::kRelu},
                  {2, Activation::kIdentity}}};
}

MlpSpec baseline_spec(std::size_t obs, const AgentConfig& cfg) {
  return MlpSpec{obs,
                 {{cfg.baseline_dense[0], Activation::kRelu},
                  {cfg.baseline_dense[1], Activation::kRelu},
                  {1, Activation::kIdentity}}};
}

std::size_t action_index(Action a) { return a == Action::kRead ? 0 : 1; }

}  // namespace

PolicyNetwork::PolicyNetwork(std::size_t observation_size, const AgentConfig& cfg)
    : gru_("policy.gru", GruSpec{observation_size, cfg.policy_hidden}),
      head_("policy.head", policy_head_spec(cfg)) {}

void PolicyNetwork::init(ParamStore& store, std::mt19937_64& rng) const {
  gru_.init(store, rng);
  head_.init(store, rng);
}

void PolicyNetwork::validate(const ParamStore& store) const {
  gru_.validate(store);
  head_.validate(store);
}

Vec PolicyNetwork::forward(const ParamStore& store, std::span<const double> obs, Vec& hidden,
                           StepCache* cache) const {
  hidden = gru_.forward(store, obs, hidden, cache ? &cache->gru : nullptr);
  const Vec logits = head_.forward(store, hidden, cache ? &cache->head : nullptr);
  Vec probs = softmax(logits);
  if (cache) cache->probs = probs;
  return probs;
}

double PolicyNetwork::weighted_log_prob(const ParamStore& store, const std::vector<Vec>& observations,
                                        const std::vector<Action>& actions,
                                        std::span<const double> weights) const {
  if (observations.size() != actions.size() || weights.size() != actions.size()) {
    throw std::domain_error("episode arrays disagree in length");
  }
  Vec hidden(hidden_size(), 0.0);
  double total = 0.0;
  for (std::size_t j = 0; j < actions.size(); ++j) {
    hidden = gru_.forward(store, observations[j], hidden);
    const Vec logp = log_softmax(head_.forward(store, hidden));
    total += weights[j] * logp[action_index(actions[j])];
  }
  return total;
}

double PolicyNetwork::weighted_log_prob_grad(ParamStore& store, const std::vector<Vec>& observations,
                                             const std::vector<Action>& actions,
                                             std::span<const double> weights, double scale) const {
  if (observations.size() != actions.size() || weights.size() != actions.size()) {
    throw std::domain_error("episode arrays disagree in length");
  }
  const std::size_t steps = actions.size();
  std::vector<StepCache> caches(steps);
  Vec hidden(hidden_size(), 0.0);
  double total = 0.0;
  for (std::size_t j = 0; j < steps; ++j) {
    hidden = gru_.forward(store, observations[j], hidden, &caches[j].gru);
    const Vec logits = head_.forward(store, hidden, &caches[j].head);
    const Vec logp = log_softmax(logits);
    caches[j].probs = softmax(logits);
    total += weights[j] * logp[action_index(actions[j])];
  }
  Vec dh_next(hidden_size(), 0.0);
  for (std::size_t j = steps; j-- > 0;) {
    const std::size_t a = action_index(actions[j]);
    Vec dlogits(2);
    for (std::size_t k = 0; k < 2; ++k) {
      dlogits[k] = scale * weights[j] * ((k == a ? 1.0 : 0.0) - caches[j].probs[k]);
    }
    Vec dh = head_.backward(store, caches[j].head, dlogits);
    axpy(1.0, dh_next, dh);
    dh_next = gru_.backward(store, caches[j].gru, dh).h_prev;
  }
  return total;
}

// ---------------------------------------------------------------------------

BaselineNetwork::BaselineNetwork(std::size_t observation_size, const AgentConfig& cfg)
    : mlp_("baseline", baseline_spec(observation_size, cfg)) {}

void BaselineNetwork::init(ParamStore& store, std::mt19937_64& rng) const { mlp_.init(store, rng); }
void BaselineNetwork::validate(const ParamStore& store) const { mlp_.validate(store); }

double BaselineNetwork::forward(const ParamStore& store, std::span<const double> obs,
                                Mlp::Cache* cache) const {
  return mlp_.forward(store, obs, cache)[0];
}

void BaselineNetwork::backward(ParamStore& store, const Mlp::Cache& cache, double grad_value) const {
  mlp_.backward(store, cache, std::span<const double>(&grad_value, 1));
}

double BaselineNetwork::loss(const ParamStore& store, const std::vector<Vec>& observations,
                             std::span<const double> returns) const {
  if (observations.size() != returns.size()) throw std::domain_error("baseline batch size mismatch");
  if (returns.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t j = 0; j < returns.size(); ++j) {
    const double e = returns[j] - forward(store, observations[j]);
    total += e * e;
  }
  return total / static_cast<double>(returns.size());
}

double BaselineNetwork::loss_grad(ParamStore& store, const std::vector<Vec>& observations,
                                  std::span<const double> returns) const {
  if (observations.size() != returns.size()) throw std::domain_error("baseline batch size mismatch");
  if (returns.empty()) return 0.0;
  const double n = static_cast<double>(returns.size());
  double total = 0.0;
  Mlp::Cache cache;
  for (std::size_t j = 0; j < returns.size(); ++j) {
    const double e = returns[j] - forward(store, observations[j], &cache);
    total += e * e;
    backward(store, cache, -2.0 * e / n);
  }
  return total / n;
}

// ---------------------------------------------------------------------------

Action select_action(std::span<const double> probs, SelectionMode mode, std::mt19937_64& rng,
                     const EpisodeCounters& counters) {
  if (probs.size() != 2) throw std::domain_error("expected two action probabilities");
  Action a;
  if (mode == SelectionMode::kGreedy) {
    a = probs[0] >= probs[1] ? Action::kRead : Action::kSpeak;
  } else {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    a = u(rng) < probs[0] ? Action::kRead : Action::kSpeak;
  }
  if (a == Action::kRead && counters.source_exhausted()) a = Action::kSpeak;
  return a;
}

std::vector<double> compute_returns(std::span<const double> rewards, double gamma) {
  std::vector<double> g(rewards.size());
  double acc = 0.0;
  for (std::size_t j = rewards.size(); j-- > 0;) {
    acc = rewards[j] + gamma * acc;
    g[j] = acc;
  }
  return g;
}

std::vector<double> normalize_advantages(std::span<const double> advantages, double epsilon) {
  const std::size_t n = advantages.size();
  std::vector<double> out(n, 0.0);
  if (n < 2) {
    if (n == 1) std::cerr << "warning: advantage normalisation over a single transition yields 0\n";
    return out;
  }
  const double mean = std::accumulate(advantages.begin(), advantages.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double a : advantages) var += (a - mean) * (a - mean);
  const double sd = std::sqrt(var / static_cast<double>(n));
  for (std::size_t j = 0; j < n; ++j) out[j] = (advantages[j] - mean) / (sd + epsilon);
  return out;
}

void prepare_batch(TransitionBatch& batch, const BaselineNetwork& baseline,
                   const ParamStore& baseline_params, double gamma, double epsilon) {
  batch.returns.clear();
  batch.baseline_values.clear();
  batch.advantages.clear();
  std::vector<double> flat;
  for (const auto& ep : batch.episodes) {
    if (ep.observations.size() != ep.actions.size()) {
      throw std::domain_error("episode was collected without observations");
    }
    auto g = compute_returns(ep.rewards, gamma);
    std::vector<double> b(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
      b[j] = baseline.forward(baseline_params, ep.observations[j]);
      flat.push_back(g[j] - b[j]);
    }
    batch.returns.push_back(std::move(g));
    batch.baseline_values.push_back(std::move(b));
  }
  const auto normalised = normalize_advantages(flat, epsilon);
  std::size_t k = 0;
  for (const auto& ep : batch.episodes) {
    batch.advantages.emplace_back(normalised.begin() + static_cast<std::ptrdiff_t>(k),
                                  normalised.begin() + static_cast<std::ptrdiff_t>(k + ep.actions.size()));
    k += ep.actions.size();
  }
}

double policy_batch_loss(const PolicyNetwork& net, const ParamStore& store, const TransitionBatch& batch) {
  double loss = 0.0;
  for (std::size_t e = 0; e < batch.episodes.size(); ++e) {
    const auto& ep = batch.episodes[e];
    loss -= net.weighted_log_prob(store, ep.observations, ep.actions, batch.advantages[e]);
  }
  return loss;
}

// ---------------------------------------------------------------------------

Agent::Agent(std::size_t observation_size, const AgentConfig& cfg)
    : config(cfg), policy_net(observation_size, cfg), baseline_net(observation_size, cfg) {
  config.validate();
  std::mt19937_64 rng(cfg.seed);
  policy_net.init(policy, rng);
  baseline_net.init(baseline, rng);
}

Agent::Agent(std::size_t observation_size, const AgentConfig& cfg, ParamStore policy_params,
             ParamStore baseline_params)
    : config(cfg),
      policy_net(observation_size, cfg),
      baseline_net(observation_size, cfg),
      policy(std::move(policy_params)),
      baseline(std::move(baseline_params)) {
  config.validate();
  policy_net.validate(policy);
  baseline_net.validate(baseline);
}

namespace {

void clip_and_step(ParamStore& store, const AgentConfig& cfg) {
  if (cfg.max_grad_norm > 0.0) {
    const double norm = store.grad_norm();
    if (norm > cfg.max_grad_norm) store.scale_grad(cfg.max_grad_norm / norm);
  }
  adam_step(store, AdamConfig{cfg.learning_rate, 0.9, 0.999, 1e-8});
}

}  // namespace

UpdateStats reinforce_update(Agent& agent, TransitionBatch& batch) {
  const AgentConfig& cfg = agent.config;
  prepare_batch(batch, agent.baseline_net, agent.baseline, cfg.gamma, cfg.advantage_epsilon);
  UpdateStats stats;

  agent.policy.zero_grad();
  for (std::size_t e = 0; e < batch.episodes.size(); ++e) {
    const auto& ep = batch.episodes[e];
    stats.policy_loss -= agent.policy_net.weighted_log_prob_grad(agent.policy, ep.observations, ep.actions,
                                                                 batch.advantages[e], -1.0);
  }
  if (!std::isfinite(stats.policy_loss)) throw std::domain_error("non-finite policy loss");
  clip_and_step(agent.policy, cfg);

  std::vector<Vec> observations;
  std::vector<double> returns;
  for (std::size_t e = 0; e < batch.episodes.size(); ++e) {
    const auto& ep = batch.episodes[e];
    observations.insert(observations.end(), ep.observations.begin(), ep.observations.end());
    returns.insert(returns.end(), batch.returns[e].begin(), batch.returns[e].end());
  }
  agent.baseline.zero_grad();
  stats.baseline_loss = agent.baseline_net.loss_grad(agent.baseline, observations, returns);
  if (!std::isfinite(stats.baseline_loss)) throw std::domain_error("non-finite baseline loss");
  clip_and_step(agent.baseline, cfg);
  return stats;
}

// ---------------------------------------------------------------------------

LearnedPolicy::LearnedPolicy(const Agent& agent, SelectionMode mode, std::uint64_t seed)
    : agent_(&agent), mode_(mode), own_rng_(seed), rng_(&own_rng_) {}

LearnedPolicy::LearnedPolicy(const Agent& agent, SelectionMode mode, std::mt19937_64* shared_rng)
    : agent_(&agent), mode_(mode), rng_(shared_rng) {}

void LearnedPolicy::begin_episode() { hidden_.assign(agent_->policy_net.hidden_size(), 0.0); }

Action LearnedPolicy::act(const Observation& obs, const EpisodeCounters& counters, std::size_t) {
  if (hidden_.empty()) begin_episode();
  last_probs_ = agent_->policy_net.forward(agent_->policy, obs.flat(), hidden_);
  return select_action(last_probs_, mode_, *rng_, counters);
}

// ---------------------------------------------------------------------------

TrainingResult train_agent(Agent& agent, const SynthesisBackend& backend, const EnvConfig& env_cfg,
                           const std::vector<const Sentence*>& sentences, const TrainingCallback& on_batch) {
  const AgentConfig& cfg = agent.config;
  if (sentences.empty()) throw std::invalid_argument("no training sentences");
  if (env_cfg.reward.gamma != cfg.gamma) {
    throw std::invalid_argument("reward.gamma and agent.gamma must agree");
  }
  Environment env(backend, env_cfg);
  if (env.observation_size() != agent.policy_net.observation_size()) {
    throw std::domain_error("agent observation size does not match the environment");
  }
  std::mt19937_64 rng(cfg.seed ^ 0xa0761d6478bd642fULL);
  std::uniform_int_distribution<std::size_t> pick(0, sentences.size() - 1);
  LearnedPolicy policy(agent, cfg.selection, &rng);

  TrainingResult result;
  TransitionBatch batch;
  for (std::size_t episode = 0; episode < cfg.episodes; ++episode) {
    const Sentence& s = *sentences[pick(rng)];
    batch.episodes.push_back(run_episode(env, s, Mode::kTrain, policy, true));
    if (batch.episodes.size() < cfg.episodes_per_update && episode + 1 < cfg.episodes) continue;

    TrainingRow row;
    row.batch = result.curve.size();
    for (const auto& ep : batch.episodes) {
      row.mean_return += ep.trace.discounted_return;
      row.mean_latency += ep.trace.latency;
      row.mean_mse += ep.trace.scored_frames ? ep.trace.total_mse / static_cast<double>(ep.trace.scored_frames) : 0.0;
    }
    const double n = static_cast<double>(batch.episodes.size());
    row.mean_return /= n;
    row.mean_latency /= n;
    row.mean_mse /= n;
    reinforce_update(agent, batch);
    result.curve.push_back(row);
    if (on_batch) on_batch(row);
    batch = TransitionBatch{};
  }
  return result;
}

}  // namespace itts
