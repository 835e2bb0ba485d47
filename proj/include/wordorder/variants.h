// Counterfactual word-order variants.
//
// The preverbal constituents of a sentence are the subtrees headed by direct
// dependents of the root verb that lie left of it. Variants re-linearize the
// sentence with those constituents permuted; everything inside a constituent
// and everything from the verb onward stays in place.

#ifndef WORDORDER_VARIANTS_H_
#define WORDORDER_VARIANTS_H_

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wordorder/relation_map.h"
#include "wordorder/treebank.h"

namespace wordorder {

enum class Origin { kReference, kVariant };
enum class OrderType { kSov, kOsvDoFronted, kOsvIoFronted, kOther };

std::string_view to_string(Origin o);
std::string_view to_string(OrderType t);
Origin parse_origin(std::string_view s);
OrderType parse_order_type(std::string_view s);

struct Constituent {
  int head_token = 0;
  int first = 0;  // inclusive surface span
  int last = 0;
  GrammaticalFunction function = GrammaticalFunction::kOther;
  std::string relation;
  std::vector<Token> tokens;

  std::string text() const;
};

struct OrderedSentence {
  Origin origin = Origin::kReference;
  std::string reference_id;
  DepTree tree;
  // In this sentence's surface order, with spans in its own positions.
  std::vector<Constituent> constituents;
  OrderType order_type = OrderType::kOther;
  // permutation[i] = slot that the i-th reference constituent occupies here.
  // Identity for references; empty when reconstructed from a file.
  std::vector<std::size_t> permutation;

  const std::string &id() const { return tree.sentence_id(); }
};

// Throws StructureError for non-projective input.
std::vector<Constituent> extract_preverbal_constituents(const DepTree &tree,
                                                        const RelationMap &config);

OrderType classify_order(std::span<const GrammaticalFunction> functions);
OrderType classify_order_type(const OrderedSentence &sentence);

// Wraps an attested sentence as the reference of its own variant set.
OrderedSentence make_reference(const DepTree &tree, const RelationMap &config);

// Rebuilds OrderedSentence metadata for a tree read back from a variants
// file (origin and ref_id come from its comments).
OrderedSentence describe_sentence(const DepTree &tree, const RelationMap &config);

constexpr std::size_t kDefaultVariantCap = 99;

// All distinct re-orderings of the preverbal constituents except the attested
// one. Textually identical constituents are interchangeable. When more than
// `cap` candidates exist, a uniform sample of `cap` is drawn with `seed`.
// Output is in lexicographic order of the constituent arrangement, variant
// k named `<ref_id>.v<k>`. Throws PreconditionError for fewer than two
// constituents.
std::vector<OrderedSentence> generate_variants(const DepTree &tree, const RelationMap &config,
                                               std::size_t cap, std::uint64_t seed);

// Number of distinct arrangements of the preverbal constituents (including
// the attested one), saturating at SIZE_MAX.
std::size_t count_arrangements(std::span<const Constituent> constituents);

class OrderRuleSet {
 public:
  static constexpr std::string_view kBegin = "<BEGIN>";
  static constexpr std::string_view kEnd = "<END>";
  using Bigram = std::pair<std::string, std::string>;

  void add(std::string_view left, std::string_view right) { bigrams_.emplace(left, right); }
  bool contains(std::string_view left, std::string_view right) const {
    return bigrams_.contains(Bigram(left, right));
  }
  // Every adjacent pair of `labels`, padded with kBegin/kEnd, is attested.
  bool accepts(std::span<const std::string> labels) const;

  std::size_t size() const { return bigrams_.size(); }
  bool empty() const { return bigrams_.empty(); }
  const std::set<Bigram> &bigrams() const { return bigrams_; }

 private:
  std::set<Bigram> bigrams_;
};

std::vector<std::string> constituent_labels(std::span<const Constituent> constituents);

OrderRuleSet learn_order_rules(std::span<const DepTree> trees, const RelationMap &config);

// Throws ConfigError when `rules` is empty.
std::vector<OrderedSentence> filter_grammatical(std::span<const OrderedSentence> variants,
                                                const OrderRuleSet &rules);

// Writes a sentence in treebank format with origin/ref_id/order_type comments.
void write_ordered_sentence(std::ostream &out, const OrderedSentence &sentence);

}  // namespace wordorder

#endif  // WORDORDER_VARIANTS_H_
