#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "itts/tensor.hpp"

namespace itts {

struct SyntheticCorpusSpec {
  std::size_t alphabet_size = 12;
  std::size_t frame_dim = 16;
  // Frames per symbol, one entry per alphabet symbol. Empty means the default
  // assignment (see default_durations).
  std::vector<std::size_t> durations;
  double sensitive_fraction = 0.25;
  double coarticulation = 0.5;
  double noise = 0.0;
  std::size_t min_length = 12;
  std::size_t max_length = 24;
  std::size_t size = 217;
  double train_fraction = 0.92;
  std::uint64_t seed = 1;

  // Throws std::invalid_argument on a violated invariant.
  void validate() const;
};

// Alternating 2 and 3 frames per symbol.
std::vector<std::size_t> default_durations(std::size_t alphabet_size);

// Per-symbol acoustic model shared by all sentences of a corpus.
struct SymbolInventory {
  std::size_t frame_dim = 0;
  double coarticulation = 0.0;
  std::vector<Vec> base;           // unit-norm
  std::vector<Vec> coart;          // norm == coarticulation
  std::vector<std::size_t> durations;
  std::vector<bool> sensitive;

  std::size_t alphabet_size() const { return base.size(); }
};

struct Sentence {
  std::size_t id = 0;
  std::vector<std::size_t> symbols;
  std::vector<std::size_t> durations;
  std::vector<bool> sensitive;
  Tensor frames;  // [T, D]

  std::size_t length() const { return symbols.size(); }
  std::size_t frame_count() const { return frames.rows(); }
  std::size_t frame_dim() const { return frames.cols(); }
  std::span<const double> frame(std::size_t s) const { return frames.row(s); }
  // Zero-based index of the symbol that owns zero-based frame f.
  std::size_t owner(std::size_t f) const;
};

struct Corpus {
  SyntheticCorpusSpec spec;
  SymbolInventory inventory;
  std::vector<Sentence> sentences;
  std::vector<std::size_t> train_ids;
  std::vector<std::size_t> test_ids;

  std::vector<const Sentence*> subset(const std::vector<std::size_t>& ids) const;
};

SymbolInventory make_inventory(const SyntheticCorpusSpec& spec);

// Ground-truth frames for a symbol sequence: frame of symbol i is base(x_i),
// plus coart(x_{i+1}) when x_i is sensitive and has a successor.
Sentence make_sentence(const SymbolInventory& inv, std::size_t id,
                       const std::vector<std::size_t>& symbols);

Corpus generate_corpus(const SyntheticCorpusSpec& spec);

// Line-delimited JSON: a header line with the generator settings and inventory, then one
// line per sentence.
void write_corpus(const Corpus& corpus, const std::string& path);
Corpus read_corpus(const std::string& path);

}  // namespace itts
