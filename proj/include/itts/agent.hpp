#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "itts/layers.hpp"
#include "itts/param_store.hpp"
#include "itts/policy.hpp"

namespace itts {

enum class SelectionMode { kSample, kGreedy };

std::string_view to_string(SelectionMode m);
SelectionMode selection_mode_from_string(std::string_view s);

struct AgentConfig {
  std::size_t policy_hidden = 64;
  std::vector<std::size_t> policy_dense = {64, 64};
  std::vector<std::size_t> baseline_dense = {64, 64};
  double gamma = 0.99;
  std::size_t episodes_per_update = 10;
  double learning_rate = 1e-4;
  double advantage_epsilon = 1e-8;
  SelectionMode selection = SelectionMode::kSample;
  // Global gradient-norm clip per network; 0 disables clipping.
  double max_grad_norm = 0.0;
  std::size_t episodes = 5000;
  std::uint64_t seed = 0;

  void validate() const;
};

// GRU over observations, then two ReLU dense layers and a two-way softmax.
// Index 0 is READ, index 1 is SPEAK.
class PolicyNetwork {
 public:
  struct StepCache {
    GruCell::Cache gru;
    Mlp::Cache head;
    Vec probs;
  };

  PolicyNetwork(std::size_t observation_size, const AgentConfig& cfg);

  std::size_t observation_size() const { return gru_.spec().input; }
  std::size_t hidden_size() const { return gru_.spec().hidden; }
  void init(ParamStore& store, std::mt19937_64& rng) const;
  void validate(const ParamStore& store) const;

  // Advances `hidden` one step and returns the action probabilities.
  Vec forward(const ParamStore& store, std::span<const double> obs, Vec& hidden,
              StepCache* cache = nullptr) const;

  // sum_j weights_j * log pi(a_j | o_1..o_j) over one episode.
  double weighted_log_prob(const ParamStore& store, const std::vector<Vec>& observations,
                           const std::vector<Action>& actions, std::span<const double> weights) const;
  // Same quantity; adds scale * d/dtheta of it to the store's gradients
  // (backpropagated through the unrolled GRU).
  double weighted_log_prob_grad(ParamStore& store, const std::vector<Vec>& observations,
                                const std::vector<Action>& actions, std::span<const double> weights,
                                double scale) const;

 private:
  GruCell gru_;
  Mlp head_;
};

// Three dense layers (ReLU, ReLU, linear) mapping an observation to a scalar.
class BaselineNetwork {
 public:
  BaselineNetwork(std::size_t observation_size, const AgentConfig& cfg);

  void init(ParamStore& store, std::mt19937_64& rng) const;
  void validate(const ParamStore& store) const;
  double forward(const ParamStore& store, std::span<const double> obs, Mlp::Cache* cache = nullptr) const;
  void backward(ParamStore& store, const Mlp::Cache& cache, double grad_value) const;

  // mean_j (G_j - b(o_j))^2
  double loss(const ParamStore& store, const std::vector<Vec>& observations,
              std::span<const double> returns) const;
  double loss_grad(ParamStore& store, const std::vector<Vec>& observations,
                   std::span<const double> returns) const;

 private:
  Mlp mlp_;
};

Action select_action(std::span<const double> probs, SelectionMode mode, std::mt19937_64& rng,
                     const EpisodeCounters& counters);

// G_j = r_j + gamma * G_{j+1}, r_j being the reward of decision j.
std::vector<double> compute_returns(std::span<const double> rewards, double gamma);

// (A - mean) / (std + eps) with population statistics over the batch. A batch
// of one yields zeros and a warning on stderr.
std::vector<double> normalize_advantages(std::span<const double> advantages, double epsilon);

struct TransitionBatch {
  std::vector<EpisodeData> episodes;
  std::vector<std::vector<double>> returns;
  std::vector<std::vector<double>> baseline_values;
  std::vector<std::vector<double>> advantages;  // normalised, per episode
};

// Computes returns, baseline values and normalised advantages in place.
void prepare_batch(TransitionBatch& batch, const BaselineNetwork& baseline,
                   const ParamStore& baseline_params, double gamma, double epsilon);

// -sum_j A_j log pi(a_j | o_j) over every episode of a prepared batch.
double policy_batch_loss(const PolicyNetwork& net, const ParamStore& store, const TransitionBatch& batch);

struct Agent {
  AgentConfig config;
  PolicyNetwork policy_net;
  BaselineNetwork baseline_net;
  ParamStore policy;    // theta
  ParamStore baseline;  // phi

  Agent(std::size_t observation_size, const AgentConfig& cfg);
  // Wraps existing parameters; throws std::domain_error on a layout mismatch.
  Agent(std::size_t observation_size, const AgentConfig& cfg, ParamStore policy_params,
        ParamStore baseline_params);
};

struct UpdateStats {
  double policy_loss = 0.0;
  double baseline_loss = 0.0;
};

// One REINFORCE step on the policy and one regression step on the baseline,
// each with its own Adam state. Throws std::domain_error on a non-finite loss.
UpdateStats reinforce_update(Agent& agent, TransitionBatch& batch);

// Learnt policy as a Policy. Keeps the GRU state across the decisions of one
// episode.
class LearnedPolicy final : public Policy {
 public:
  LearnedPolicy(const Agent& agent, SelectionMode mode, std::uint64_t seed = 0);
  LearnedPolicy(const Agent& agent, SelectionMode mode, std::mt19937_64* shared_rng);
  std::string name() const override { return "agent"; }
  void begin_episode() override;
  Action act(const Observation& obs, const EpisodeCounters& counters, std::size_t step) override;
  const Vec& last_probs() const { return last_probs_; }

 private:
  const Agent* agent_;
  SelectionMode mode_;
  std::mt19937_64 own_rng_;
  std::mt19937_64* rng_;
  Vec hidden_;
  Vec last_probs_;
};

struct TrainingRow {
  std::size_t batch = 0;
  double mean_return = 0.0;
  double mean_latency = 0.0;
  double mean_mse = 0.0;
};

struct TrainingResult {
  std::vector<TrainingRow> curve;
};

using TrainingCallback = std::function<void(const TrainingRow&)>;

// Collects `episodes_per_update` sampled train-mode episodes on random training
// sentences, then applies one update; repeats for cfg.episodes episodes.
TrainingResult train_agent(Agent& agent, const SynthesisBackend& backend, const EnvConfig& env_cfg,
                           const std::vector<const Sentence*>& sentences,
                           const TrainingCallback& on_batch = {});

}  // namespace itts
