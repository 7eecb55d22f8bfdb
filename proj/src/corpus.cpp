#include "itts/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

#include <json.hpp>

namespace itts {

using nlohmann::json;

void SyntheticCorpusSpec::validate() const {
  if (alphabet_size < 2) throw std::invalid_argument("corpus.alphabet_size must be >= 2");
  if (frame_dim < 1) throw std::invalid_argument("corpus.frame_dim must be >= 1");
  if (frame_dim == 1 && alphabet_size > 2) {
    throw std::invalid_argument("corpus.frame_dim = 1 admits at most 2 distinct unit vectors");
  }
  if (!durations.empty() && durations.size() != alphabet_size) {
    throw std::invalid_argument("corpus.durations needs one entry per symbol");
  }
  for (auto d : durations) {
    if (d < 1) throw std::invalid_argument("corpus.durations must be >= 1");
  }
  if (!(sensitive_fraction >= 0.0 && sensitive_fraction <= 1.0)) {
    throw std::invalid_argument("corpus.sensitive_fraction must lie in [0, 1]");
  }
  if (!(coarticulation > 0.0)) throw std::invalid_argument("corpus.coarticulation must be > 0");
  if (!(noise >= 0.0)) throw std::invalid_argument("corpus.noise must be >= 0");
  if (min_length < 1 || max_length < min_length) {
    throw std::invalid_argument("corpus length range must satisfy 1 <= min_length <= max_length");
  }
  if (size < 1) throw std::invalid_argument("corpus.size must be >= 1");
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
    throw std::invalid_argument("corpus.train_fraction must lie in (0, 1]");
  }
}

std::vector<std::size_t> default_durations(std::size_t alphabet_size) {
  std::vector<std::size_t> out(alphabet_size);
  for (std::size_t a = 0; a < alphabet_size; ++a) out[a] = 2 + a % 2;
  return out;
}

std::size_t Sentence::owner(std::size_t f) const {
  std::size_t acc = 0;
  for (std::size_t i = 0; i < durations.size(); ++i) {
    acc += durations[i];
    if (f < acc) return i;
  }
  throw std::out_of_range("frame " + std::to_string(f) + " beyond the sentence's " +
                          std::to_string(acc) + " frames");
}

std::vector<const Sentence*> Corpus::subset(const std::vector<std::size_t>& ids) const {
  std::vector<const Sentence*> out;
  out.reserve(ids.size());
  for (auto id : ids) out.push_back(&sentences.at(id));
  return out;
}

namespace {

Vec random_direction(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (;;) {
    Vec v(dim);
    for (double& x : v) x = normal(rng);
    const double n = std::sqrt(dot(v, v));
    if (n < 1e-8) continue;
    for (double& x : v) x /= n;
    return v;
  }
}

double distance(const Vec& a, const Vec& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(acc);
}

}  // namespace

SymbolInventory make_inventory(const SyntheticCorpusSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  SymbolInventory inv;
  inv.frame_dim = spec.frame_dim;
  inv.coarticulation = spec.coarticulation;
  const std::size_t a = spec.alphabet_size;

  if (spec.frame_dim == 1) {
    inv.base = {Vec{1.0}, Vec{-1.0}};
    inv.base.resize(a);
  } else {
    while (inv.base.size() < a) {
      Vec v = random_direction(spec.frame_dim, rng);
      bool distinct = true;
      for (const auto& other : inv.base) distinct = distinct && distance(v, other) > 1e-3;
      if (distinct) inv.base.push_back(std::move(v));
    }
  }
  for (std::size_t s = 0; s < a; ++s) {
    Vec c = random_direction(spec.frame_dim, rng);
    for (double& x : c) x *= spec.coarticulation;
    inv.coart.push_back(std::move(c));
  }
  inv.durations = spec.durations.empty() ? default_durations(a) : spec.durations;

  std::vector<std::size_t> order(a);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_sensitive = static_cast<std::size_t>(std::lround(spec.sensitive_fraction * a));
  inv.sensitive.assign(a, false);
  for (std::size_t k = 0; k < n_sensitive; ++k) inv.sensitive[order[k]] = true;
  return inv;
}

Sentence make_sentence(const SymbolInventory& inv, std::size_t id,
                       const std::vector<std::size_t>& symbols) {
  if (symbols.empty()) throw std::domain_error("empty sentence");
  Sentence s;
  s.id = id;
  s.symbols = symbols;
  std::size_t total = 0;
  for (auto x : symbols) {
    if (x >= inv.alphabet_size()) throw std::out_of_range("symbol id out of range");
    s.durations.push_back(inv.durations[x]);
    s.sensitive.push_back(inv.sensitive[x]);
    total += inv.durations[x];
  }
  const std::size_t d = inv.frame_dim;
  s.frames = Tensor::matrix(total, d);
  std::size_t f = 0;
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    Vec frame = inv.base[symbols[i]];
    if (s.sensitive[i] && i + 1 < symbols.size()) axpy(1.0, inv.coart[symbols[i + 1]], frame);
    for (std::size_t k = 0; k < s.durations[i]; ++k, ++f) {
      for (std::size_t c = 0; c < d; ++c) s.frames.at(f, c) = frame[c];
    }
  }
  return s;
}

Corpus generate_corpus(const SyntheticCorpusSpec& spec) {
  Corpus corpus;
  corpus.spec = spec;
  corpus.inventory = make_inventory(spec);
  std::mt19937_64 rng(spec.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_int_distribution<std::size_t> length(spec.min_length, spec.max_length);
  std::uniform_int_distribution<std::size_t> symbol(0, spec.alphabet_size - 1);
  std::normal_distribution<double> noise(0.0, spec.noise > 0.0 ? spec.noise : 1.0);
  for (std::size_t id = 0; id < spec.size; ++id) {
    std::vector<std::size_t> symbols(length(rng));
    for (auto& x : symbols) x = symbol(rng);
    Sentence s = make_sentence(corpus.inventory, id, symbols);
    if (spec.noise > 0.0) {
      for (double& v : s.frames.data()) v += noise(rng);
    }
    corpus.sentences.push_back(std::move(s));
  }
  const auto n_train = std::min<std::size_t>(
      spec.size, static_cast<std::size_t>(std::lround(spec.train_fraction * spec.size)));
  for (std::size_t id = 0; id < spec.size; ++id) {
    (id < n_train ? corpus.train_ids : corpus.test_ids).push_back(id);
  }
  return corpus;
}

namespace {

json spec_to_json(const SyntheticCorpusSpec& s) {
  return json{{"alphabet_size", s.alphabet_size}, {"frame_dim", s.frame_dim},
              {"durations", s.durations},         {"sensitive_fraction", s.sensitive_fraction},
              {"coarticulation", s.coarticulation}, {"noise", s.noise},
              {"min_length", s.min_length},       {"max_length", s.max_length},
              {"size", s.size},                   {"train_fraction", s.train_fraction},
              {"seed", s.seed}};
}

SyntheticCorpusSpec spec_from_json(const json& j) {
  SyntheticCorpusSpec s;
  s.alphabet_size = j.at("alphabet_size").get<std::size_t>();
  s.frame_dim = j.at("frame_dim").get<std::size_t>();
  s.durations = j.at("durations").get<std::vector<std::size_t>>();
  s.sensitive_fraction = j.at("sensitive_fraction").get<double>();
  s.coarticulation = j.at("coarticulation").get<double>();
  s.noise = j.at("noise").get<double>();
  s.min_length = j.at("min_length").get<std::size_t>();
  s.max_length = j.at("max_length").get<std::size_t>();
  s.size = j.at("size").get<std::size_t>();
  s.train_fraction = j.at("train_fraction").get<double>();
  s.seed = j.at("seed").get<std::uint64_t>();
  return s;
}

}  // namespace

void write_corpus(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  const auto& inv = corpus.inventory;
  json header{{"kind", "inventory"},
              {"spec", spec_to_json(corpus.spec)},
              {"frame_dim", inv.frame_dim},
              {"coarticulation", inv.coarticulation},
              {"base", inv.base},
              {"coart", inv.coart},
              {"durations", inv.durations},
              {"sensitive", inv.sensitive},
              {"train_ids", corpus.train_ids},
              {"test_ids", corpus.test_ids}};
  out << header.dump() << '\n';
  for (const auto& s : corpus.sentences) {
    json line{{"kind", "sentence"},
              {"id", s.id},
              {"symbols", s.symbols},
              {"durations", s.durations},
              {"sensitive", s.sensitive},
              {"frame_count", s.frame_count()},
              {"frames", s.frames.data()}};
    out << line.dump() << '\n';
  }
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

Corpus read_corpus(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open corpus '" + path + "'");
  Corpus corpus;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      const std::string kind = j.at("kind").get<std::string>();
      if (kind == "inventory") {
        corpus.spec = spec_from_json(j.at("spec"));
        auto& inv = corpus.inventory;
        inv.frame_dim = j.at("frame_dim").get<std::size_t>();
        inv.coarticulation = j.at("coarticulation").get<double>();
        inv.base = j.at("base").get<std::vector<Vec>>();
        inv.coart = j.at("coart").get<std::vector<Vec>>();
        inv.durations = j.at("durations").get<std::vector<std::size_t>>();
        inv.sensitive = j.at("sensitive").get<std::vector<bool>>();
        corpus.train_ids = j.at("train_ids").get<std::vector<std::size_t>>();
        corpus.test_ids = j.at("test_ids").get<std::vector<std::size_t>>();
      } else if (kind == "sentence") {
        Sentence s;
        s.id = j.at("id").get<std::size_t>();
        s.symbols = j.at("symbols").get<std::vector<std::size_t>>();
        s.durations = j.at("durations").get<std::vector<std::size_t>>();
        s.sensitive = j.at("sensitive").get<std::vector<bool>>();
        const auto t = j.at("frame_count").get<std::size_t>();
        auto data = j.at("frames").get<std::vector<double>>();
        if (t == 0 || data.size() % t != 0) throw std::runtime_error("bad frame matrix");
        const std::size_t cols = data.size() / t;
        s.frames = Tensor({t, cols}, std::move(data));
        if (s.id != corpus.sentences.size()) throw std::runtime_error("sentence ids out of order");
        corpus.sentences.push_back(std::move(s));
      } else {
        throw std::runtime_error("unknown record kind '" + kind + "'");
      }
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (corpus.inventory.base.empty()) throw std::runtime_error(path + ": missing inventory header");
  return corpus;
}

}  // namespace itts
