#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "itts/agent.hpp"
#include "test_support.hpp"

using namespace itts;

namespace {

AgentConfig small_config() {
  AgentConfig cfg;
  cfg.policy_hidden = 4;
  cfg.policy_dense = {5, 5};
  cfg.baseline_dense = {5, 5};
  return cfg;
}

std::vector<Vec> random_observations(std::size_t n, std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Vec> out(n, Vec(dim));
  for (auto& o : out)
    for (auto& v : o) v = g(rng);
  return out;
}

EpisodeCounters counters_at(std::size_t read, std::size_t n) {
  EpisodeCounters k;
  k.read = read;
  k.source_length = n;
  return k;
}

}  // namespace

TEST_SUITE("returns and advantages") {
  TEST_CASE("discounted returns run backwards") {
    const std::vector<double> r{1.0, 2.0, 3.0};
    const auto g = compute_returns(r, 0.5);
    CHECK(g == std::vector<double>{2.75, 3.5, 3.0});
    CHECK(compute_returns(std::vector<double>{}, 0.9).empty());
  }

  TEST_CASE("gamma one sums the remaining rewards") {
    const std::vector<double> r{-1.0, -2.0, 0.5, 4.0};
    const auto g = compute_returns(r, 1.0);
    CHECK(g == std::vector<double>{1.5, 2.5, 4.5, 4.0});
  }

  TEST_CASE("normalisation uses population statistics") {
    const std::vector<double> a{1.0, 2.0, 3.0};
    const auto n = normalize_advantages(a, 0.0);
    const double sd = std::sqrt(2.0 / 3.0);
    CHECK(n[0] == doctest::Approx(-1.0 / sd));
    CHECK(n[1] == doctest::Approx(0.0));
    CHECK(n[2] == doctest::Approx(1.0 / sd));
  }

  TEST_CASE("normalised advantages have zero mean and unit spread") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(5.0, 3.0);
    std::vector<double> a(200);
    for (auto& v : a) v = g(rng);
    const auto n = normalize_advantages(a, 1e-8);
    double mean = 0.0, sq = 0.0;
    for (double v : n) mean += v;
    mean /= n.size();
    for (double v : n) sq += (v - mean) * (v - mean);
    CHECK(std::abs(mean) < 1e-12);
    CHECK(std::sqrt(sq / n.size()) == doctest::Approx(1.0).epsilon(1e-6));
  }

  TEST_CASE("a batch of one normalises to zero") {
    const auto n = normalize_advantages(std::vector<double>{7.0}, 1e-8);
    CHECK(n == std::vector<double>{0.0});
  }

  TEST_CASE("constant advantages normalise to zero") {
    const auto n = normalize_advantages(std::vector<double>{2.0, 2.0, 2.0}, 1e-8);
    for (double v : n) CHECK(v == 0.0);
  }
}

TEST_SUITE("select_action") {
  std::mt19937_64 rng(1);

  TEST_CASE("greedy picks the larger probability and READ on ties") {
    CHECK(select_action(Vec{0.7, 0.3}, SelectionMode::kGreedy, rng, counters_at(1, 5)) == Action::kRead);
    CHECK(select_action(Vec{0.2, 0.8}, SelectionMode::kGreedy, rng, counters_at(1, 5)) == Action::kSpeak);
    CHECK(select_action(Vec{0.5, 0.5}, SelectionMode::kGreedy, rng, counters_at(1, 5)) == Action::kRead);
  }

  TEST_CASE("READ is masked once the source is exhausted") {
    CHECK(select_action(Vec{1.0, 0.0}, SelectionMode::kGreedy, rng, counters_at(5, 5)) == Action::kSpeak);
    for (int k = 0; k < 20; ++k)
      CHECK(select_action(Vec{0.9, 0.1}, SelectionMode::kSample, rng, counters_at(5, 5)) == Action::kSpeak);
  }

  TEST_CASE("sampling follows the probabilities") {
    std::mt19937_64 r(9);
    int reads = 0;
    const int n = 20000;
    for (int k = 0; k < n; ++k)
      reads += select_action(Vec{0.3, 0.7}, SelectionMode::kSample, r, counters_at(1, 5)) == Action::kRead;
    CHECK(std::abs(reads / double(n) - 0.3) < 0.02);
  }

  TEST_CASE("wrong probability count is rejected") {
    CHECK_THROWS_AS(select_action(Vec{1.0}, SelectionMode::kGreedy, rng, counters_at(1, 5)), std::domain_error);
  }
}

TEST_SUITE("policy network") {
  TEST_CASE("default architecture") {
    Agent agent(27, AgentConfig{});
    CHECK(agent.policy_net.hidden_size() == 64);
    CHECK(agent.policy_net.observation_size() == 27);
    std::mt19937_64 rng(0);
    Vec h(64, 0.0);
    const auto obs = random_observations(1, 27, rng);
    const auto p = agent.policy_net.forward(agent.policy, obs[0], h);
    REQUIRE(p.size() == 2);
    CHECK(p[0] + p[1] == doctest::Approx(1.0));
    CHECK(p[0] > 0.0);
    CHECK(p[1] > 0.0);
  }

  TEST_CASE("log-probability gradient matches finite differences") {
    const auto cfg = small_config();
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      std::mt19937_64 rng(seed);
      PolicyNetwork net(3, cfg);
      ParamStore store;
      net.init(store, rng);
      const std::size_t len = 2 + seed % 4;
      const auto obs = random_observations(len, 3, rng);
      std::vector<Action> actions;
      std::vector<double> weights;
      std::normal_distribution<double> g(0.0, 1.0);
      for (std::size_t j = 0; j < len; ++j) {
        actions.push_back(rng() % 2 ? Action::kRead : Action::kSpeak);
        weights.push_back(g(rng));
      }
      store.zero_grad();
      const double value = net.weighted_log_prob_grad(store, obs, actions, weights, 1.0);
      const auto objective = [&](const ParamStore& s) { return net.weighted_log_prob(s, obs, actions, weights); };
      CHECK(value == doctest::Approx(objective(store)));
      const auto res = compare_gradients(store, finite_difference_grad(objective, store), 1e-4, 1e-7);
      INFO("seed " << seed << " worst " << res.worst_param << " rel " << res.max_rel_error);
      CHECK(res.passed);
    }
  }

  TEST_CASE("gradient scale is linear") {
    const auto cfg = small_config();
    std::mt19937_64 rng(4);
    PolicyNetwork net(3, cfg);
    ParamStore a;
    net.init(a, rng);
    ParamStore b = a;
    const auto obs = random_observations(3, 3, rng);
    const std::vector<Action> actions{Action::kRead, Action::kSpeak, Action::kSpeak};
    const std::vector<double> w{1.0, -0.5, 2.0};
    a.zero_grad();
    b.zero_grad();
    net.weighted_log_prob_grad(a, obs, actions, w, 1.0);
    net.weighted_log_prob_grad(b, obs, actions, w, -2.0);
    for (const auto& name : a.names())
      for (std::size_t k = 0; k < a.grad(name).size(); ++k)
        CHECK(b.grad(name)[k] == doctest::Approx(-2.0 * a.grad(name)[k]));
  }

  TEST_CASE("mismatched lengths are rejected") {
    const auto cfg = small_config();
    std::mt19937_64 rng(4);
    PolicyNetwork net(3, cfg);
    ParamStore store;
    net.init(store, rng);
    const auto obs = random_observations(2, 3, rng);
    CHECK_THROWS(net.weighted_log_prob(store, obs, {Action::kRead}, std::vector<double>{1.0, 1.0}));
  }
}

TEST_SUITE("baseline network") {
  TEST_CASE("regression gradient matches finite differences") {
    const auto cfg = small_config();
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      std::mt19937_64 rng(100 + seed);
      BaselineNetwork net(3, cfg);
      ParamStore store;
      net.init(store, rng);
      const auto obs = random_observations(4, 3, rng);
      const std::vector<double> returns{-3.0, 1.0, 0.5, -0.25};
      store.zero_grad();
      const double value = net.loss_grad(store, obs, returns);
      const auto objective = [&](const ParamStore& s) { return net.loss(s, obs, returns); };
      CHECK(value == doctest::Approx(objective(store)));
      const auto res = compare_gradients(store, finite_difference_grad(objective, store), 1e-4, 1e-7);
      INFO("seed " << seed << " worst " << res.worst_param);
      CHECK(res.passed);
    }
  }
}

TEST_SUITE("reinforce update") {
  // Two episodes over the same observations: all-READ earns +1 per step,
  // all-SPEAK earns -1. READ must become more likely.
  TransitionBatch contrast_batch(const std::vector<Vec>& obs) {
    TransitionBatch batch;
    for (Action a : {Action::kRead, Action::kSpeak}) {
      EpisodeData ep;
      ep.observations = obs;
      ep.actions.assign(obs.size(), a);
      ep.rewards.assign(obs.size(), a == Action::kRead ? 1.0 : -1.0);
      batch.episodes.push_back(ep);
    }
    return batch;
  }

  TEST_CASE("positive advantage raises the probability of the chosen action") {
    auto cfg = small_config();
    cfg.learning_rate = 1e-2;
    Agent agent(3, cfg);
    std::mt19937_64 rng(2);
    const auto obs = random_observations(4, 3, rng);
    const auto p_read = [&] {
      Vec h(agent.policy_net.hidden_size(), 0.0);
      return agent.policy_net.forward(agent.policy, obs[0], h)[0];
    };
    const double before = p_read();
    double first_baseline = 0.0, last_baseline = 0.0;
    for (int k = 0; k < 30; ++k) {
      auto batch = contrast_batch(obs);
      const auto stats = reinforce_update(agent, batch);
      if (k == 0) first_baseline = stats.baseline_loss;
      last_baseline = stats.baseline_loss;
    }
    CHECK(p_read() > before + 0.1);
    CHECK(last_baseline < first_baseline);
  }

  TEST_CASE("prepared batch fields line up") {
    const auto cfg = small_config();
    Agent agent(3, cfg);
    std::mt19937_64 rng(2);
    auto batch = contrast_batch(random_observations(3, 3, rng));
    prepare_batch(batch, agent.baseline_net, agent.baseline, cfg.gamma, cfg.advantage_epsilon);
    REQUIRE(batch.returns.size() == 2);
    CHECK(batch.returns[0] == compute_returns(batch.episodes[0].rewards, cfg.gamma));
    double sum = 0.0;
    for (const auto& a : batch.advantages)
      for (double v : a) sum += v;
    CHECK(std::abs(sum) < 1e-9);
    CHECK(batch.advantages[0][0] > 0.0);
    CHECK(batch.advantages[1][0] < 0.0);
  }

  TEST_CASE("update steps both optimisers separately") {
    const auto cfg = small_config();
    Agent agent(3, cfg);
    std::mt19937_64 rng(5);
    auto batch = contrast_batch(random_observations(3, 3, rng));
    const auto policy_before = agent.policy;
    const auto baseline_before = agent.baseline;
    reinforce_update(agent, batch);
    for (const auto& name : agent.policy.names()) CHECK(agent.policy.adam(name).step == 1);
    for (const auto& name : agent.baseline.names()) CHECK(agent.baseline.adam(name).step == 1);
    bool moved = false;
    for (const auto& name : agent.policy.names())
      for (std::size_t k = 0; k < agent.policy.value(name).size(); ++k)
        moved |= agent.policy.value(name)[k] != policy_before.value(name)[k];
    CHECK(moved);
    moved = false;
    for (const auto& name : agent.baseline.names())
      for (std::size_t k = 0; k < agent.baseline.value(name).size(); ++k)
        moved |= agent.baseline.value(name)[k] != baseline_before.value(name)[k];
    CHECK(moved);
  }
}

TEST_SUITE("agent") {
  TEST_CASE("configuration defaults") {
    const AgentConfig cfg;
    CHECK(cfg.policy_hidden == 64);
    CHECK(cfg.policy_dense == std::vector<std::size_t>{64, 64});
    CHECK(cfg.baseline_dense == std::vector<std::size_t>{64, 64});
    CHECK(cfg.gamma == 0.99);
    CHECK(cfg.episodes_per_update == 10);
    CHECK(cfg.learning_rate == 1e-4);
    CHECK(cfg.selection == SelectionMode::kSample);
  }

  TEST_CASE("invalid settings are rejected") {
    AgentConfig cfg;
    cfg.episodes_per_update = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = {};
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  }

  TEST_CASE("wrapping parameters of the wrong shape fails") {
    const auto cfg = small_config();
    Agent a(3, cfg);
    CHECK_THROWS_AS(Agent(4, cfg, a.policy, a.baseline), std::domain_error);
  }

  TEST_CASE("learned policy is reproducible and respects the mask") {
    const auto fx = test::small_oracle_fixture();
    Environment env(*fx.backend, EnvConfig{});
    Agent agent(env.observation_size(), small_config());
    for (std::uint64_t seed : {1u, 2u}) {
      LearnedPolicy p1(agent, SelectionMode::kSample, seed), p2(agent, SelectionMode::kSample, seed);
      for (const auto& s : fx.corpus.sentences) {
        const auto a = run_episode(env, s, Mode::kTrain, p1);
        const auto b = run_episode(env, s, Mode::kTrain, p2);
        CHECK(a.actions == b.actions);
        CHECK(check_trace(a.trace, 0.99) == "");
      }
    }
  }

  TEST_CASE("short training run is deterministic") {
    const auto fx = test::small_oracle_fixture();
    auto cfg = small_config();
    cfg.episodes = 25;
    cfg.seed = 3;
    std::vector<const Sentence*> sentences;
    for (const auto& s : fx.corpus.sentences) sentences.push_back(&s);
    const EnvConfig env_cfg;
    Environment probe(*fx.backend, env_cfg);
    Agent a(probe.observation_size(), cfg), b(probe.observation_size(), cfg);
    const auto ra = train_agent(a, *fx.backend, env_cfg, sentences);
    const auto rb = train_agent(b, *fx.backend, env_cfg, sentences);
    REQUIRE(ra.curve.size() == 3);
    for (std::size_t k = 0; k < ra.curve.size(); ++k) CHECK(ra.curve[k].mean_return == rb.curve[k].mean_return);
    for (const auto& name : a.policy.names())
      for (std::size_t k = 0; k < a.policy.value(name).size(); ++k)
        CHECK(a.policy.value(name)[k] == b.policy.value(name)[k]);
  }

  TEST_CASE("discount mismatch between agent and rewards is rejected") {
    const auto fx = test::small_oracle_fixture();
    auto cfg = small_config();
    cfg.episodes = 10;
    EnvConfig env_cfg;
    env_cfg.reward.gamma = 0.9;
    Environment probe(*fx.backend, env_cfg);
    Agent a(probe.observation_size(), cfg);
    std::vector<const Sentence*> sentences{&fx.corpus.sentences[0]};
    CHECK_THROWS_AS(train_agent(a, *fx.backend, env_cfg, sentences), std::invalid_argument);
  }
}
