#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <stdexcept>

#include "itts/backend.hpp"
#include "itts/baselines.hpp"
#include "itts/corpus.hpp"
#include "itts/learned_backend.hpp"
#include "test_support.hpp"

using namespace itts;

namespace {

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

Vec diff(std::span<const double> a, std::span<const double> b) {
  Vec d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return d;
}

double row_sum(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace

TEST_SUITE("corpus") {
  TEST_CASE("two non-sensitive symbols of two frames each") {
    SyntheticCorpusSpec spec;
    spec.alphabet_size = 2;
    spec.durations = {2, 2};
    spec.sensitive_fraction = 0.0;
    const auto inv = make_inventory(spec);
    const auto s = make_sentence(inv, 0, {0, 1});
    REQUIRE(s.frame_count() == 4);
    for (std::size_t d = 0; d < inv.frame_dim; ++d) {
      CHECK(s.frames.at(0, d) == inv.base[0][d]);
      CHECK(s.frames.at(1, d) == inv.base[0][d]);
      CHECK(s.frames.at(2, d) == inv.base[1][d]);
      CHECK(s.frames.at(3, d) == inv.base[1][d]);
    }
  }

  TEST_CASE("sensitive frames depend on the successor") {
    const auto inv = make_inventory(SyntheticCorpusSpec{});
    std::size_t a = 0;
    while (!inv.sensitive[a]) ++a;
    const std::size_t b = (a + 1) % inv.alphabet_size(), c = (a + 2) % inv.alphabet_size();
    const auto sb = make_sentence(inv, 0, {a, b});
    const auto sc = make_sentence(inv, 1, {a, c});
    const double observed = norm(diff(sb.frame(0), sc.frame(0)));
    const double expected = norm(diff(inv.coart[b], inv.coart[c]));
    CHECK(observed > 0.0);
    CHECK(std::abs(observed - expected) < 1e-12);
  }

  TEST_CASE("the last symbol has no coarticulation") {
    const auto inv = make_inventory(SyntheticCorpusSpec{});
    std::size_t a = 0;
    while (!inv.sensitive[a]) ++a;
    const auto s = make_sentence(inv, 0, {a});
    for (std::size_t d = 0; d < inv.frame_dim; ++d) CHECK(s.frames.at(0, d) == inv.base[a][d]);
  }

  TEST_CASE("inventory geometry") {
    SyntheticCorpusSpec spec;
    const auto inv = make_inventory(spec);
    std::size_t sensitive = 0;
    for (std::size_t a = 0; a < inv.alphabet_size(); ++a) {
      CHECK(std::abs(norm(inv.base[a]) - 1.0) < 1e-12);
      CHECK(std::abs(norm(inv.coart[a]) - spec.coarticulation) < 1e-12);
      CHECK(inv.durations[a] >= 2);
      CHECK(inv.durations[a] <= 4);
      sensitive += inv.sensitive[a];
      for (std::size_t b = 0; b < a; ++b) CHECK(norm(diff(inv.base[a], inv.base[b])) > 1e-3);
    }
    CHECK(sensitive == 3);
  }

  TEST_CASE("frame count equals the duration sum") {
    const auto& c = test::default_corpus();
    for (const auto& s : c.sentences) {
      std::size_t t = 0;
      for (auto d : s.durations) t += d;
      CHECK(s.frame_count() == t);
      CHECK(s.length() >= c.spec.min_length);
      CHECK(s.length() <= c.spec.max_length);
    }
  }

  TEST_CASE("default split is 200 train and 17 test sentences") {
    const auto& c = test::default_corpus();
    CHECK(c.sentences.size() == 217);
    CHECK(c.train_ids.size() == 200);
    CHECK(c.test_ids.size() == 17);
  }

  TEST_CASE("same seed gives the same corpus, another seed does not") {
    SyntheticCorpusSpec spec;
    spec.size = 20;
    const auto a = generate_corpus(spec);
    const auto b = generate_corpus(spec);
    spec.seed = 2;
    const auto c = generate_corpus(spec);
    bool all_same = true, any_diff = false;
    for (std::size_t k = 0; k < a.sentences.size(); ++k) {
      all_same = all_same && a.sentences[k].symbols == b.sentences[k].symbols &&
                 a.sentences[k].frames == b.sentences[k].frames;
      any_diff = any_diff || a.sentences[k].symbols != c.sentences[k].symbols;
    }
    CHECK(all_same);
    CHECK(any_diff);
  }

  TEST_CASE("noise perturbs frames only when requested") {
    SyntheticCorpusSpec spec;
    spec.size = 3;
    spec.noise = 0.1;
    const auto noisy = generate_corpus(spec);
    spec.noise = 0.0;
    const auto clean = generate_corpus(spec);
    CHECK(noisy.sentences[0].symbols == clean.sentences[0].symbols);
    CHECK(noisy.sentences[0].frames != clean.sentences[0].frames);
  }

  TEST_CASE("invalid specs are rejected") {
    SyntheticCorpusSpec spec;
    spec.alphabet_size = 1;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = {};
    spec.coarticulation = 0.0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = {};
    spec.sensitive_fraction = 1.5;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = {};
    spec.durations = {2, 0, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2};
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
    spec = {};
    spec.size = 0;
    CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  }

  TEST_CASE("file round trip is exact") {
    const auto fx = test::small_oracle_fixture();
    const auto path = test::temp_path("corpus_roundtrip.ndjson");
    write_corpus(fx.corpus, path);
    const auto back = read_corpus(path);
    REQUIRE(back.sentences.size() == fx.corpus.sentences.size());
    CHECK(back.train_ids == fx.corpus.train_ids);
    CHECK(back.test_ids == fx.corpus.test_ids);
    CHECK(back.inventory.base == fx.corpus.inventory.base);
    CHECK(back.inventory.coart == fx.corpus.inventory.coart);
    CHECK(back.inventory.sensitive == fx.corpus.inventory.sensitive);
    for (std::size_t k = 0; k < back.sentences.size(); ++k) {
      CHECK(back.sentences[k].frames == fx.corpus.sentences[k].frames);
      CHECK(back.sentences[k].symbols == fx.corpus.sentences[k].symbols);
    }
    write_corpus(back, path + ".2");
    CHECK(test::read_file(path) == test::read_file(path + ".2"));
  }

  TEST_CASE("corrupt corpus lines are reported with their number") {
    const auto path = test::temp_path("corpus_bad.ndjson");
    const auto fx = test::small_oracle_fixture();
    write_corpus(fx.corpus, path);
    auto text = test::read_file(path);
    const auto second = text.find('\n') + 1;
    text.insert(second, "{not json}\n");
    {
      std::ofstream out(path, std::ios::binary);
      out << text;
    }
    CHECK_THROWS_WITH(read_corpus(path), doctest::Contains(":2:"));
  }
}

TEST_SUITE("oracle backend") {
  const auto inv = test::two_symbol_inventory();

  TEST_CASE("reset reads one character") {
    const auto s = make_sentence(inv, 0, {0, 1});
    OracleBackend be(inv);
    auto session = be.reset(s, Mode::kTrain);
    CHECK(session->read_count() == 1);
    CHECK(!session->finished());
    CHECK(session->encoder_outputs()[0] == inv.base[0]);
    const Vec a = session->attention();
    CHECK(a == Vec{1.0});
  }

  TEST_CASE("reading past the end fails") {
    const auto s = make_sentence(inv, 0, {0, 1});
    OracleBackend be(inv);
    auto session = be.reset(s, Mode::kTrain);
    session->read();
    CHECK_THROWS_WITH_AS(session->read(), "source exhausted", std::domain_error);
  }

  TEST_CASE("encoder outputs are the base vectors") {
    const auto& c = test::default_corpus();
    OracleBackend be(c.inventory);
    const auto& s = c.sentences[0];
    auto session = be.reset(s, Mode::kTrain);
    while (session->read_count() < s.length()) session->read();
    for (std::size_t i = 0; i < s.length(); ++i) CHECK(session->encoder_outputs()[i] == c.inventory.base[s.symbols[i]]);
  }

  TEST_CASE("attention peaks on the owner of the next frame") {
    const auto s = make_sentence(inv, 0, {0, 1, 0});
    const Vec a = oracle_attention(s, 2, 3);
    REQUIRE(a.size() == 3);
    CHECK(std::abs(a[0] - 0.1) < 1e-15);
    CHECK(std::abs(a[1] - 0.8) < 1e-15);
    CHECK(std::abs(a[2] - 0.1) < 1e-15);
    const Vec first = oracle_attention(s, 0, 3);
    CHECK(std::abs(first[0] - 0.8 / 0.9) < 1e-15);
    CHECK(std::abs(first[1] - 0.1 / 0.9) < 1e-15);
    CHECK(first[2] == 0.0);
    CHECK(oracle_attention(s, 0, 1) == Vec{1.0});
  }

  TEST_CASE("attention rows are distributions over the read columns") {
    const auto& c = test::default_corpus();
    for (std::size_t k = 0; k < 20; ++k) {
      const auto& s = c.sentences[k];
      for (std::size_t f = 0; f < s.frame_count(); ++f) {
        for (std::size_t r = 1; r <= s.length(); ++r) {
          const Vec a = oracle_attention(s, f, r);
          CHECK(a.size() == r);
          CHECK(std::abs(row_sum(a) - 1.0) < 1e-12);
          for (double w : a) CHECK(w >= 0.0);
        }
      }
    }
  }

  TEST_CASE("decoded frames carry the analytic error") {
    const auto s = make_sentence(inv, 0, {0, 1});
    OracleBackend be(inv);
    const double delta2_over_d = 0.25 / 2.0;

    auto early = be.reset(s, Mode::kTrain);
    const Vec y0 = early->decode_frame(context_vector(early->encoder_outputs(), early->attention()), Vec(2, 0.0));
    CHECK(std::abs(mean_squared_error(y0, s.frame(0)) - delta2_over_d) < 1e-15);

    auto late = be.reset(s, Mode::kTrain);
    late->read();
    const Vec y1 = late->decode_frame(context_vector(late->encoder_outputs(), late->attention()), Vec(2, 0.0));
    CHECK(mean_squared_error(y1, s.frame(0)) == 0.0);

    // Symbol 1 is not sensitive.
    late->decode_frame(context_vector(late->encoder_outputs(), late->attention()), s.frame(0));
    const Vec y2 = late->decode_frame(context_vector(late->encoder_outputs(), late->attention()), s.frame(1));
    CHECK(mean_squared_error(y2, s.frame(2)) == 0.0);
  }

  TEST_CASE("per-frame error takes only the two analytic values") {
    const auto& c = test::default_corpus();
    const double degraded = c.spec.coarticulation * c.spec.coarticulation / static_cast<double>(c.spec.frame_dim);
    OracleBackend be(c.inventory);
    std::mt19937_64 rng(4);
    for (std::size_t k = 0; k < 30; ++k) {
      const auto& s = c.sentences[k];
      auto session = be.reset(s, Mode::kTrain);
      for (std::size_t f = 0; f < s.frame_count(); ++f) {
        while (session->read_count() < s.length() && rng() % 3 == 0) session->read();
        const std::size_t r = session->read_count();
        const Vec y = session->decode_frame(context_vector(session->encoder_outputs(), session->attention()),
                                            f ? s.frame(f - 1) : Vec(s.frame_dim(), 0.0));
        const double mse = mean_squared_error(y, s.frame(f));
        const std::size_t o = s.owner(f);
        const bool expect_degraded = s.sensitive[o] && o + 1 < s.length() && r < o + 2;
        CHECK(oracle_frame_degraded(s, f, r) == expect_degraded);
        if (expect_degraded) {
          CHECK(std::abs(mse - degraded) < 1e-12);
        } else {
          CHECK(mse < 1e-30);
        }
      }
    }
  }

  TEST_CASE("full buffer reproduces the ground truth") {
    const auto& c = test::default_corpus();
    OracleBackend be(c.inventory);
    for (std::size_t k = 0; k < 10; ++k) {
      const auto& s = c.sentences[k];
      auto session = be.reset(s, Mode::kTrain);
      while (session->read_count() < s.length()) session->read();
      for (std::size_t f = 0; f < s.frame_count(); ++f) {
        const Vec y = session->decode_frame(context_vector(session->encoder_outputs(), session->attention()),
                                            f ? s.frame(f - 1) : Vec(s.frame_dim(), 0.0));
        CHECK(mean_squared_error(y, s.frame(f)) == 0.0);
      }
    }
  }

  TEST_CASE("finished exactly at the target length; no decoding past it in train mode") {
    const auto s = make_sentence(inv, 0, {0, 1});
    OracleBackend be(inv);
    auto session = be.reset(s, Mode::kTrain);
    session->read();
    for (std::size_t f = 0; f < 4; ++f) {
      CHECK(!session->finished());
      session->decode_frame(context_vector(session->encoder_outputs(), session->attention()), Vec(2, 0.0));
    }
    CHECK(session->finished());
    CHECK_THROWS_AS(session->decode_frame(Vec(2, 0.0), Vec(2, 0.0)), std::domain_error);
  }

  TEST_CASE("alignment rows are zero beyond the buffer") {
    const auto s = make_sentence(inv, 0, {0, 1, 0});
    OracleBackend be(inv);
    auto session = be.reset(s, Mode::kTrain);
    session->decode_frame(context_vector(session->encoder_outputs(), session->attention()), Vec(2, 0.0));
    REQUIRE(session->alignments().size() == 1);
    CHECK(session->alignments()[0] == Vec{1.0, 0.0, 0.0});
  }

  TEST_CASE("empty sentences are rejected") {
    Sentence empty;
    OracleBackend be(inv);
    CHECK_THROWS_AS(be.reset(empty, Mode::kTrain), std::domain_error);
  }

  TEST_CASE("clones continue independently") {
    const auto s = make_sentence(inv, 0, {0, 1, 0});
    OracleBackend be(inv);
    auto a = be.reset(s, Mode::kTrain);
    auto b = a->clone();
    a->read();
    CHECK(a->read_count() == 2);
    CHECK(b->read_count() == 1);
  }
}

TEST_SUITE("context vector") {
  TEST_CASE("single column and mean") {
    const std::vector<Vec> h{{1.0, 2.0}, {3.0, -2.0}};
    CHECK(context_vector(h, Vec{1.0}) == Vec{1.0, 2.0});
    CHECK(context_vector(h, Vec{0.5, 0.5}) == Vec{2.0, 0.0});
  }

  TEST_CASE("matches an independent accumulation") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<Vec> h(4, Vec(3));
    for (auto& v : h) {
      for (auto& x : v) x = u(rng) - 0.5;
    }
    Vec a(4);
    for (auto& x : a) x = u(rng);
    const double total = row_sum(a);
    for (auto& x : a) x /= total;
    const Vec c = context_vector(h, a);
    for (std::size_t d = 0; d < 3; ++d) {
      double expected = 0.0;
      for (std::size_t i = 0; i < 4; ++i) expected += a[i] * h[i][d];
      CHECK(std::abs(c[d] - expected) < 1e-12);
    }
  }

  TEST_CASE("weights longer than the buffer are rejected") {
    const std::vector<Vec> h{{1.0}};
    CHECK_THROWS_AS(context_vector(h, Vec{0.5, 0.5}), std::domain_error);
    CHECK_THROWS_AS(context_vector(h, Vec{}), std::domain_error);
  }
}

TEST_SUITE("learned backend") {
  TEST_CASE("attention sums to one over the read prefix") {
    const auto fx = test::small_oracle_fixture();
    LearnedBackend be(fx.corpus.inventory.alphabet_size(), fx.corpus.inventory.frame_dim, LearnedBackendConfig{});
    for (const auto& s : fx.corpus.sentences) {
      auto session = be.reset(s, Mode::kTrain);
      for (std::size_t f = 0; f < s.frame_count(); ++f) {
        if (session->read_count() < s.length() && f % 2 == 1) session->read();
        const Vec a = session->attention();
        CHECK(a.size() == session->read_count());
        CHECK(std::abs(row_sum(a) - 1.0) < 1e-12);
        session->decode_frame(context_vector(session->encoder_outputs(), a), s.frame(f));
        const Vec& row = session->alignments().back();
        CHECK(row.size() == s.length());
        for (std::size_t i = session->read_count(); i < s.length(); ++i) CHECK(row[i] == 0.0);
      }
    }
  }

  TEST_CASE("encoder outputs do not depend on later reads") {
    const auto& c = test::default_corpus();
    LearnedBackend be(c.inventory.alphabet_size(), c.inventory.frame_dim, LearnedBackendConfig{});
    const auto& s = c.sentences[3];
    auto full = be.reset(s, Mode::kTrain);
    while (full->read_count() < s.length()) full->read();
    for (std::size_t r = 1; r <= s.length(); ++r) {
      auto partial = be.reset(s, Mode::kTrain);
      while (partial->read_count() < r) partial->read();
      for (std::size_t i = 0; i < r; ++i) CHECK(partial->encoder_outputs()[i] == full->encoder_outputs()[i]);
    }
  }

  TEST_CASE("loss gradient matches finite differences") {
    SyntheticCorpusSpec spec;
    spec.alphabet_size = 4;
    spec.frame_dim = 3;
    spec.durations = {2, 3, 2, 4};
    spec.min_length = 3;
    spec.max_length = 4;
    spec.size = 10;
    const auto corpus = generate_corpus(spec);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      LearnedBackendConfig cfg;
      cfg.encoder_hidden = 2 + seed % 5;
      cfg.decoder_hidden = 2 + (seed * 3) % 7;
      cfg.seed = seed;
      LearnedBackend be(4, 3, cfg);
      ParamStore store = be.params();
      const Sentence& s = corpus.sentences[seed];
      store.zero_grad();
      be.loss_and_grad(s, store);
      const auto numeric = finite_difference_grad([&](const ParamStore& p) { return be.loss(s, p); }, store);
      const auto res = compare_gradients(store, numeric);
      INFO("seed " << seed << " worst " << res.worst_param << " rel " << res.max_rel_error);
      CHECK(res.passed);
    }
  }

  TEST_CASE("untrained frame error is of the order of the target variance") {
    const auto& c = test::default_corpus();
    LearnedBackend be(c.inventory.alphabet_size(), c.inventory.frame_dim, LearnedBackendConfig{});
    const auto test_set = c.subset(c.test_ids);
    double var = 0.0, mean_sq = 0.0;
    std::size_t n = 0;
    for (const auto* s : test_set) {
      for (double v : s->frames.data()) {
        mean_sq += v * v;
        ++n;
      }
    }
    var = mean_sq / static_cast<double>(n);
    const double mse = be.frame_mse(test_set);
    CHECK(mse > 0.5 * var);
    CHECK(mse < 3.0 * var);
  }

  TEST_CASE("training is reproducible for a fixed seed") {
    SyntheticCorpusSpec spec;
    spec.size = 24;
    const auto corpus = generate_corpus(spec);
    LearnedBackendConfig cfg;
    cfg.max_epochs = 3;
    BackendTrainingResult a, b;
    const auto be_a = train_learned_backend(corpus, cfg, &a);
    const auto be_b = train_learned_backend(corpus, cfg, &b);
    REQUIRE(a.curve.size() == b.curve.size());
    for (std::size_t k = 0; k < a.curve.size(); ++k) {
      CHECK(std::abs(a.curve[k].train_loss - b.curve[k].train_loss) <= 1e-9);
      CHECK(a.curve[k].validation_mse == b.curve[k].validation_mse);
    }
    for (const auto& name : be_a.params().names()) CHECK(be_a.params().value(name) == be_b.params().value(name));
  }

  TEST_CASE("trained backend: held-out frame error at most 0.05") {
    const auto& c = test::default_corpus();
    const double mse = test::trained_backend().frame_mse(c.subset(c.test_ids));
    INFO("held-out MSE " << mse);
    CHECK(mse <= 0.05);
  }

  TEST_CASE("trained backend: stop token fires within 20% of the target length") {
    const auto& c = test::default_corpus();
    const auto& be = test::trained_backend();
    std::size_t ok = 0, total = 0;
    for (const auto& ids : {c.test_ids, std::vector<std::size_t>(c.train_ids.begin(), c.train_ids.begin() + 20)}) {
      for (auto id : ids) {
        const auto& s = c.sentences[id];
        const auto d = be.decode_offline(s, Mode::kEval, 8 * s.length());
        const double t = static_cast<double>(s.frame_count());
        const double emitted = static_cast<double>(d.frames.size());
        ok += std::abs(emitted - t) <= 0.2 * t;
        ++total;
      }
    }
    INFO(ok << " of " << total << " sentences stopped in range");
    CHECK(ok == total);
  }

  TEST_CASE("restricted decoding under wait-until-end equals full-buffer decoding") {
    const auto& c = test::default_corpus();
    const auto& be = test::trained_backend();
    Environment env(be, EnvConfig{});
    WaitUntilEndPolicy wue;
    for (std::size_t k = 0; k < 5; ++k) {
      const auto& s = c.sentences[c.test_ids[k]];
      run_episode(env, s, Mode::kTrain, wue);
      const auto offline = be.decode_offline(s, Mode::kTrain);
      REQUIRE(env.generated_frames().size() == offline.frames.size());
      for (std::size_t f = 0; f < offline.frames.size(); ++f) {
        CHECK(env.generated_frames()[f] == offline.frames[f]);
        CHECK(env.session().alignments()[f] == offline.alignments[f]);
      }
    }
  }

  TEST_CASE("parameter layout is validated") {
    LearnedBackendConfig cfg;
    LearnedBackend be(12, 16, cfg);
    ParamStore wrong = be.params();
    ParamStore missing;
    CHECK_THROWS_AS(LearnedBackend(12, 8, cfg, wrong), std::domain_error);
    CHECK_THROWS_AS(LearnedBackend(12, 16, cfg, missing), std::domain_error);
  }
}
