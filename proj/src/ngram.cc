#include "wordorder/ngram.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "text_util.h"
#include "wordorder/errors.h"

namespace wordorder {

namespace {

constexpr std::string_view kMagic = "wordorder-trigram";
constexpr int kFormatVersion = 1;
constexpr std::uint32_t kMaxSymbols = 1u << 21;

// Discounts for counts 1..k from a count-of-counts table. `coc[r]` is the
// number of n-grams seen exactly r times.
std::vector<double> katz_discounts(const std::map<long long, double> &coc, int k) {
  std::vector<double> d(static_cast<std::size_t>(k), 1.0);
  std::vector<double> n(static_cast<std::size_t>(k + 2), 0.0);  // n[1..k+1]
  bool any_zero = false;
  for (int r = 1; r <= k + 1; ++r) {
    const auto it = coc.find(r);
    n[static_cast<std::size_t>(r)] = it == coc.end() ? 0.0 : it->second;
    any_zero = any_zero || n[static_cast<std::size_t>(r)] == 0.0;
  }
  if (any_zero) {
    // log n_r = a + b log r over every observed r.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (const auto &[r, nr] : coc) {
      if (nr <= 0) continue;
      const double x = std::log(static_cast<double>(r));
      const double y = std::log(nr);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
      ++m;
    }
    const double denom = m * sxx - sx * sx;
    if (m < 2 || denom <= 0) return d;
    const double b = (m * sxy - sx * sy) / denom;
    const double a = (sy - b * sx) / m;
    for (int r = 1; r <= k + 1; ++r)
      if (n[static_cast<std::size_t>(r)] == 0.0)
        n[static_cast<std::size_t>(r)] = std::exp(a + b * std::log(static_cast<double>(r)));
  }
  const double common = (k + 1) * n[static_cast<std::size_t>(k + 1)] / n[1];
  for (int r = 1; r <= k; ++r) {
    const double rstar = (r + 1) * n[static_cast<std::size_t>(r + 1)] / n[static_cast<std::size_t>(r)];
    const double value = (rstar / r - common) / (1.0 - common);
    if (1.0 - common > 0 && value > 0 && value <= 1.0 && std::isfinite(value))
      d[static_cast<std::size_t>(r - 1)] = value;
  }
  // Pool adjacent violators so that d_r never decreases with r; otherwise a
  // further observation of an n-gram can lower its probability.
  std::vector<std::pair<double, int>> blocks;  // mean, width
  for (double v : d) {
    blocks.emplace_back(v, 1);
    while (blocks.size() > 1 && blocks[blocks.size() - 2].first > blocks.back().first) {
      const auto [v2, w2] = blocks.back();
      blocks.pop_back();
      auto &[v1, w1] = blocks.back();
      v1 = (v1 * w1 + v2 * w2) / (w1 + w2);
      w1 += w2;
    }
  }
  std::size_t i = 0;
  for (const auto &[v, w] : blocks)
    for (int j = 0; j < w; ++j) d[i++] = v;
  return d;
}

struct Reservation {
  double seen_scale;
  double reserved;
};

// `discounted` is the retained fraction sum_w d(c_w) c_w / total.
Reservation reserve(double discounted, bool has_unseen, double floor) {
  if (!has_unseen) return {1.0 / discounted, 0.0};
  const double reserved = 1.0 - discounted;
  if (reserved < floor) return {(1.0 - floor) / discounted, floor};
  return {1.0, reserved};
}

}  // namespace

TrigramModel TrigramModel::train(std::span<const std::vector<std::string>> corpus,
                                 const TrigramOptions &options) {
  if (corpus.empty()) throw TrainingError("empty training corpus");
  if (options.min_count < 1) throw TrainingError("min_count must be positive");
  if (options.discount_max_count < 1) throw TrainingError("discount_max_count must be positive");

  std::map<std::string, long long> freq;
  for (const auto &sentence : corpus)
    for (const auto &w : sentence) ++freq[w];

  TrigramModel m;
  m.options_ = options;
  m.symbols_ = {std::string(kUnkSymbol), std::string(kBosSymbol), std::string(kEosSymbol)};
  for (const auto &[w, c] : freq)
    if (c >= options.min_count && w != kUnkSymbol && w != kBosSymbol && w != kEosSymbol)
      m.symbols_.push_back(w);
  if (m.symbols_.size() >= kMaxSymbols) throw TrainingError("vocabulary too large");
  for (std::size_t i = 0; i < m.symbols_.size(); ++i)
    m.ids_.emplace(m.symbols_[i], static_cast<WordId>(i));
  m.unigram_counts_.assign(m.symbols_.size(), 0);

  for (const auto &sentence : corpus) {
    WordId u = kBos;
    WordId v = kBos;
    for (std::size_t i = 0; i <= sentence.size(); ++i) {
      const WordId w = i < sentence.size() ? m.id(sentence[i]) : kEos;
      ++m.unigram_counts_[w];
      ++m.bigram_counts_[key2(v, w)];
      ++m.trigram_counts_[key3(u, v, w)];
      u = v;
      v = w;
    }
  }
  m.compute_discounts();
  m.compute_contexts();
  return m;
}

TrigramModel::WordId TrigramModel::id(std::string_view word) const {
  const auto it = ids_.find(std::string(word));
  if (it == ids_.end() || it->second == kBos || it->second == kEos) return kUnk;
  return it->second;
}

std::vector<TrigramModel::WordId> TrigramModel::predicted_symbols() const {
  std::vector<WordId> out;
  out.reserve(symbols_.size() - 1);
  for (WordId i = 0; i < symbols_.size(); ++i)
    if (i != kBos) out.push_back(i);
  return out;
}

long long TrigramModel::count(WordId v, WordId w) const {
  const auto it = bigram_counts_.find(key2(v, w));
  return it == bigram_counts_.end() ? 0 : it->second;
}

long long TrigramModel::count(WordId u, WordId v, WordId w) const {
  const auto it = trigram_counts_.find(key3(u, v, w));
  return it == trigram_counts_.end() ? 0 : it->second;
}

double TrigramModel::discount(int order, long long count) const {
  if (count > options_.discount_max_count || count < 1) return 1.0;
  return discounts_[static_cast<std::size_t>(order - 1)][static_cast<std::size_t>(count - 1)];
}

void TrigramModel::compute_discounts() {
  std::array<std::map<long long, double>, 3> coc;
  for (WordId w = 0; w < unigram_counts_.size(); ++w)
    if (unigram_counts_[w] > 0) coc[0][unigram_counts_[w]] += 1;
  for (const auto &[k, c] : bigram_counts_) coc[1][c] += 1;
  for (const auto &[k, c] : trigram_counts_) coc[2][c] += 1;
  for (std::size_t o = 0; o < 3; ++o) discounts_[o] = katz_discounts(coc[o], options_.discount_max_count);
}

void TrigramModel::compute_contexts() {
  const std::size_t predicted = symbols_.size() - 1;
  const double floor = options_.min_reserved_mass;

  unigram_total_ = 0;
  double retained = 0;
  std::size_t unseen = 0;
  for (WordId w = 0; w < unigram_counts_.size(); ++w) {
    if (w == kBos) continue;
    const long long c = unigram_counts_[w];
    unigram_total_ += c;
    if (c > 0) retained += discount(1, c) * static_cast<double>(c);
    else ++unseen;
  }
  retained /= static_cast<double>(unigram_total_);
  const Reservation uni = reserve(retained, unseen > 0, floor);
  unigram_seen_scale_ = uni.seen_scale;
  unigram_unseen_prob_ = unseen > 0 ? uni.reserved / static_cast<double>(unseen) : 0.0;

  // Successor lists per context.
  std::unordered_map<WordId, std::vector<std::pair<WordId, long long>>> bi_succ;
  for (const auto &[k, c] : bigram_counts_)
    bi_succ[static_cast<WordId>(k >> 32)].emplace_back(static_cast<WordId>(k & 0xffffffffu), c);
  std::unordered_map<std::uint64_t, std::vector<std::pair<WordId, long long>>> tri_succ;
  for (const auto &[k, c] : trigram_counts_) {
    const auto u = static_cast<WordId>(k >> 42);
    const auto v = static_cast<WordId>((k >> 21) & (kMaxSymbols - 1));
    const auto w = static_cast<WordId>(k & (kMaxSymbols - 1));
    tri_succ[key2(u, v)].emplace_back(w, c);
  }

  // Shared by both orders: given successor counts and the lower-order
  // distribution, fill scale and backoff weight.
  const auto build = [&](std::vector<std::pair<WordId, long long>> &succ, int order,
                         const auto &lower) {
    std::sort(succ.begin(), succ.end());
    ContextInfo info;
    double kept = 0;
    double lower_seen = 0;
    for (const auto &[w, c] : succ) {
      info.total += c;
      kept += discount(order, c) * static_cast<double>(c);
      lower_seen += lower(w);
    }
    kept /= static_cast<double>(info.total);
    const bool has_unseen = succ.size() < predicted;
    const Reservation r = reserve(kept, has_unseen, floor);
    info.seen_scale = r.seen_scale;
    if (has_unseen) {
      double lower_unseen = 1.0 - lower_seen;
      if (lower_unseen < 1e-4) {
        // Sum directly to avoid cancellation.
        lower_unseen = 0;
        std::size_t j = 0;
        for (WordId w = 0; w < symbols_.size(); ++w) {
          if (w == kBos) continue;
          while (j < succ.size() && succ[j].first < w) ++j;
          if (j < succ.size() && succ[j].first == w) continue;
          lower_unseen += lower(w);
        }
      }
      info.backoff = r.reserved / lower_unseen;
    } else {
      info.backoff = 0.0;
    }
    return info;
  };

  bigram_contexts_.clear();
  for (auto &[v, succ] : bi_succ)
    bigram_contexts_[v] = build(succ, 2, [this](WordId w) { return unigram_probability(w); });
  trigram_contexts_.clear();
  for (auto &[ctx, succ] : tri_succ) {
    const auto v = static_cast<WordId>(ctx & 0xffffffffu);
    trigram_contexts_[ctx] =
        build(succ, 3, [this, v](WordId w) { return bigram_probability(v, w); });
  }
}

double TrigramModel::unigram_probability(WordId w) const {
  if (w == kBos) return 0.0;
  const long long c = unigram_counts_[w];
  if (c == 0) return unigram_unseen_prob_;
  return discount(1, c) * static_cast<double>(c) / static_cast<double>(unigram_total_) *
         unigram_seen_scale_;
}

double TrigramModel::bigram_probability(WordId v, WordId w) const {
  if (w == kBos) return 0.0;
  const auto it = bigram_contexts_.find(v);
  if (it == bigram_contexts_.end()) return unigram_probability(w);
  const ContextInfo &ctx = it->second;
  const long long c = count(v, w);
  if (c > 0)
    return discount(2, c) * static_cast<double>(c) / static_cast<double>(ctx.total) * ctx.seen_scale;
  return ctx.backoff * unigram_probability(w);
}

double TrigramModel::probability(WordId u, WordId v, WordId w) const {
  if (w == kBos) return 0.0;
  const auto it = trigram_contexts_.find(key2(u, v));
  if (it == trigram_contexts_.end()) return bigram_probability(v, w);
  const ContextInfo &ctx = it->second;
  const long long c = count(u, v, w);
  if (c > 0)
    return discount(3, c) * static_cast<double>(c) / static_cast<double>(ctx.total) * ctx.seen_scale;
  return ctx.backoff * bigram_probability(v, w);
}

void TrigramModel::save(std::ostream &out) const {
  out << kMagic << ' ' << kFormatVersion << '\n';
  out << "min_count " << options_.min_count << '\n';
  out << "discount_max_count " << options_.discount_max_count << '\n';
  out << "min_reserved_mass " << internal::format_double(options_.min_reserved_mass) << '\n';
  out << "symbols " << symbols_.size() << '\n';
  for (WordId i = 0; i < symbols_.size(); ++i) out << symbols_[i] << '\t' << unigram_counts_[i] << '\n';
  for (std::size_t o = 0; o < 3; ++o) {
    out << "discounts " << o + 1;
    for (double d : discounts_[o]) out << ' ' << internal::format_double(d);
    out << '\n';
  }
  std::vector<std::pair<std::pair<WordId, WordId>, long long>> bi;
  for (const auto &[k, c] : bigram_counts_)
    bi.push_back({{static_cast<WordId>(k >> 32), static_cast<WordId>(k & 0xffffffffu)}, c});
  std::sort(bi.begin(), bi.end());
  out << "bigrams " << bi.size() << '\n';
  for (const auto &[k, c] : bi) out << symbols_[k.first] << '\t' << symbols_[k.second] << '\t' << c << '\n';
  std::vector<std::pair<std::uint64_t, long long>> tri(trigram_counts_.begin(), trigram_counts_.end());
  std::sort(tri.begin(), tri.end());
  out << "trigrams " << tri.size() << '\n';
  for (const auto &[k, c] : tri) {
    out << symbols_[k >> 42] << '\t' << symbols_[(k >> 21) & (kMaxSymbols - 1)] << '\t'
        << symbols_[k & (kMaxSymbols - 1)] << '\t' << c << '\n';
  }
}

TrigramModel TrigramModel::load(std::istream &in) {
  TrigramModel m;
  std::string line;
  std::size_t line_no = 0;
  const auto next = [&]() -> std::string_view {
    if (!std::getline(in, line)) throw FormatError("truncated trigram model");
    ++line_no;
    return line;
  };
  const auto header = [&](std::string_view expected) {
    const auto parts = internal::split_whitespace(next());
    if (parts.size() != 2 || parts[0] != expected)
      throw ParseError(line_no, "expected '" + std::string(expected) + " <value>'");
    return std::string(parts[1]);
  };
  const auto to_int = [&](const std::string &s) {
    const auto v = internal::parse_int(s);
    if (!v || *v < 0) throw ParseError(line_no, "expected a non-negative integer, got '" + s + "'");
    return *v;
  };
  const auto to_double = [&](std::string_view s) {
    const auto v = internal::parse_double(s);
    if (!v) throw ParseError(line_no, "expected a number, got '" + std::string(s) + "'");
    return *v;
  };

  if (header(kMagic) != std::to_string(kFormatVersion)) throw FormatError("unsupported model version");
  m.options_.min_count = to_int(header("min_count"));
  m.options_.discount_max_count = static_cast<int>(to_int(header("discount_max_count")));
  m.options_.min_reserved_mass = to_double(header("min_reserved_mass"));
  const auto n_symbols = static_cast<std::size_t>(to_int(header("symbols")));
  if (n_symbols < 3 || n_symbols >= kMaxSymbols) throw FormatError("bad symbol count");
  for (std::size_t i = 0; i < n_symbols; ++i) {
    const auto parts = internal::split(next(), '\t');
    if (parts.size() != 2) throw ParseError(line_no, "expected '<symbol>\\t<count>'");
    m.symbols_.emplace_back(parts[0]);
    m.unigram_counts_.push_back(to_int(std::string(parts[1])));
    if (!m.ids_.emplace(m.symbols_.back(), static_cast<WordId>(i)).second)
      throw ParseError(line_no, "duplicate symbol");
  }
  if (m.symbols_[kUnk] != kUnkSymbol || m.symbols_[kBos] != kBosSymbol || m.symbols_[kEos] != kEosSymbol)
    throw FormatError("model does not start with the reserved symbols");
  for (std::size_t o = 0; o < 3; ++o) {
    const auto parts = internal::split_whitespace(next());
    if (parts.size() != static_cast<std::size_t>(m.options_.discount_max_count) + 2 ||
        parts[0] != "discounts" || parts[1] != std::to_string(o + 1))
      throw ParseError(line_no, "bad discounts line");
    for (std::size_t i = 2; i < parts.size(); ++i) m.discounts_[o].push_back(to_double(parts[i]));
  }
  const auto symbol_id = [&](std::string_view s) {
    const auto it = m.ids_.find(std::string(s));
    if (it == m.ids_.end()) throw ParseError(line_no, "unknown symbol '" + std::string(s) + "'");
    return it->second;
  };
  const auto n_bi = static_cast<std::size_t>(to_int(header("bigrams")));
  for (std::size_t i = 0; i < n_bi; ++i) {
    const auto parts = internal::split(next(), '\t');
    if (parts.size() != 3) throw ParseError(line_no, "expected a bigram row");
    m.bigram_counts_[key2(symbol_id(parts[0]), symbol_id(parts[1]))] = to_int(std::string(parts[2]));
  }
  const auto n_tri = static_cast<std::size_t>(to_int(header("trigrams")));
  for (std::size_t i = 0; i < n_tri; ++i) {
    const auto parts = internal::split(next(), '\t');
    if (parts.size() != 4) throw ParseError(line_no, "expected a trigram row");
    m.trigram_counts_[key3(symbol_id(parts[0]), symbol_id(parts[1]), symbol_id(parts[2]))] =
        to_int(std::string(parts[3]));
  }
  m.compute_contexts();
  return m;
}

TrigramModel TrigramModel::load_file(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model '" + path + "'");
  return load(in);
}

void TrigramModel::save_file(const std::string &path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write model '" + path + "'");
  save(out);
}

double word_surprisal(const TrigramModel &model, std::span<const std::string> sentence,
                      std::size_t position) {
  const auto at = [&](std::ptrdiff_t i) -> TrigramModel::WordId {
    if (i < 0) return TrigramModel::kBos;
    if (static_cast<std::size_t>(i) >= sentence.size()) return TrigramModel::kEos;
    return model.id(sentence[static_cast<std::size_t>(i)]);
  };
  const auto p = static_cast<std::ptrdiff_t>(position);
  return -std::log2(model.probability(at(p - 2), at(p - 1), at(p)));
}

double sentence_surprisal(const TrigramModel &model, std::span<const std::string> sentence) {
  double total = 0;
  for (std::size_t i = 0; i <= sentence.size(); ++i) total += word_surprisal(model, sentence, i);
  return total;
}

std::vector<std::vector<std::string>> read_corpus(std::istream &in) {
  std::vector<std::vector<std::string>> corpus;
  std::string line;
  while (std::getline(in, line)) {
    const auto words = internal::split_whitespace(line);
    if (words.empty()) continue;
    corpus.emplace_back(words.begin(), words.end());
  }
  return corpus;
}

}  // namespace wordorder
