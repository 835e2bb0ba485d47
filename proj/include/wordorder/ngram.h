// Trigram language model with Good-Turing discounting and Katz backoff.
//
// Sentences are padded as <s> <s> w1 ... wn </s>. Words seen fewer than
// min_count times become <unk>. Counts r <= discount_max_count are
// discounted with the Katz form of Good-Turing,
//
//   d_r = (r*/r - (k+1) n_{k+1} / n_1) / (1 - (k+1) n_{k+1} / n_1),
//   r*  = (r+1) n_{r+1} / n_r,
//
// where n_r is the count-of-counts of the n-gram order. Zero n_r needed by
// the formula are replaced by a log-linear fit of n_r against r. A discount
// outside (0, 1] falls back to 1. Every observed context reserves at least
// min_reserved_mass for unseen continuations, which receive the lower-order
// estimate scaled by the context's backoff weight. The unigram level spreads
// its reserved mass uniformly over symbols that were never seen.
//
// Surprisal is reported in bits.

#ifndef WORDORDER_NGRAM_H_
#define WORDORDER_NGRAM_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace wordorder {

struct TrigramOptions {
  long long min_count = 2;
  int discount_max_count = 5;
  double min_reserved_mass = 1e-3;
};

class TrigramModel {
 public:
  using WordId = std::uint32_t;
  static constexpr WordId kUnk = 0;
  static constexpr WordId kBos = 1;
  static constexpr WordId kEos = 2;
  static constexpr std::string_view kUnkSymbol = "<unk>";
  static constexpr std::string_view kBosSymbol = "<s>";
  static constexpr std::string_view kEosSymbol = "</s>";

  // Throws TrainingError for an empty corpus.
  static TrigramModel train(std::span<const std::vector<std::string>> corpus,
                            const TrigramOptions &options = {});

  WordId id(std::string_view word) const;
  const std::string &symbol(WordId id) const { return symbols_[id]; }
  std::size_t symbol_count() const { return symbols_.size(); }
  // Symbols a distribution ranges over: every symbol except <s>.
  std::vector<WordId> predicted_symbols() const;

  // P(w | u v) with u, v, w symbol ids.
  double probability(WordId u, WordId v, WordId w) const;
  double bigram_probability(WordId v, WordId w) const;
  double unigram_probability(WordId w) const;

  double discount(int order, long long count) const;
  long long count(WordId w) const { return unigram_counts_[w]; }
  long long count(WordId v, WordId w) const;
  long long count(WordId u, WordId v, WordId w) const;

  const TrigramOptions &options() const { return options_; }

  void save(std::ostream &out) const;
  // Throws ParseError/FormatError on malformed input.
  static TrigramModel load(std::istream &in);
  static TrigramModel load_file(const std::string &path);
  void save_file(const std::string &path) const;

 private:
  struct ContextInfo {
    long long total = 0;
    double seen_scale = 1.0;  // multiplies d(r) r / total for seen words
    double backoff = 1.0;     // weight on the lower order for unseen words
  };

  static std::uint64_t key2(WordId v, WordId w) { return (std::uint64_t{v} << 32) | w; }
  static std::uint64_t key3(WordId u, WordId v, WordId w) {
    return (std::uint64_t{u} << 42) | (std::uint64_t{v} << 21) | w;
  }

  void compute_discounts();
  void compute_contexts();

  TrigramOptions options_;
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, WordId> ids_;
  std::vector<long long> unigram_counts_;
  std::unordered_map<std::uint64_t, long long> bigram_counts_;
  std::unordered_map<std::uint64_t, long long> trigram_counts_;
  // discounts_[order - 1][r - 1] for r in 1..discount_max_count
  std::array<std::vector<double>, 3> discounts_;

  long long unigram_total_ = 0;
  double unigram_seen_scale_ = 1.0;
  double unigram_unseen_prob_ = 0.0;
  std::unordered_map<WordId, ContextInfo> bigram_contexts_;
  std::unordered_map<std::uint64_t, ContextInfo> trigram_contexts_;
};

// Surprisal in bits of the word at `position` (0-based; position ==
// sentence.size() scores the end-of-sentence symbol) given the two preceding
// words. Unknown words are scored as <unk>.
double word_surprisal(const TrigramModel &model, std::span<const std::string> sentence,
                      std::size_t position);

// Sum of word_surprisal over every word and the end-of-sentence symbol.
double sentence_surprisal(const TrigramModel &model, std::span<const std::string> sentence);

// One whitespace-tokenized sentence per line; blank lines are skipped.
std::vector<std::vector<std::string>> read_corpus(std::istream &in);

}  // namespace wordorder

#endif  // WORDORDER_NGRAM_H_
