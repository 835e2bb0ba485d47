#include "wordorder/variants.h"

#include <algorithm>
#include <deque>
#include <limits>
#include <map>

#include "text_util.h"
#include "wordorder/errors.h"
#include "wordorder/random.h"

namespace wordorder {

std::string_view to_string(Origin o) { return o == Origin::kReference ? "reference" : "variant"; }

std::string_view to_string(OrderType t) {
  switch (t) {
    case OrderType::kSov: return "SOV";
    case OrderType::kOsvDoFronted: return "OSV_DO_FRONTED";
    case OrderType::kOsvIoFronted: return "OSV_IO_FRONTED";
    case OrderType::kOther: return "OTHER";
  }
  return "OTHER";
}

Origin parse_origin(std::string_view s) {
  if (s == "reference") return Origin::kReference;
  if (s == "variant") return Origin::kVariant;
  throw FormatError("unknown origin '" + std::string(s) + "'");
}

OrderType parse_order_type(std::string_view s) {
  for (OrderType t : {OrderType::kSov, OrderType::kOsvDoFronted, OrderType::kOsvIoFronted,
                      OrderType::kOther})
    if (to_string(t) == s) return t;
  throw FormatError("unknown order type '" + std::string(s) + "'");
}

std::string Constituent::text() const {
  std::vector<std::string_view> forms;
  for (const Token &t : tokens) forms.push_back(t.form);
  return internal::join(forms, " ");
}

std::vector<Constituent> extract_preverbal_constituents(const DepTree &tree,
                                                        const RelationMap &config) {
  if (!is_projective(tree)) throw StructureError(tree.sentence_id(), "tree is not projective");
  const int root = tree.root_index();
  std::vector<Constituent> out;
  for (int d : tree.dependents(root)) {
    const auto [first, last] = tree.subtree_span(d);
    if (last >= root) continue;
    Constituent c;
    c.head_token = d;
    c.first = first;
    c.last = last;
    c.relation = tree.token(d).relation;
    c.function = config.function_of(c.relation);
    for (int i = first; i <= last; ++i) c.tokens.push_back(tree.token(i));
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(),
            [](const Constituent &a, const Constituent &b) { return a.first < b.first; });
  return out;
}

OrderType classify_order(std::span<const GrammaticalFunction> functions) {
  std::size_t subject = functions.size();
  bool has_object = false;
  for (std::size_t i = 0; i < functions.size(); ++i) {
    if (functions[i] == GrammaticalFunction::kSubject && subject == functions.size()) subject = i;
    has_object = has_object || functions[i] == GrammaticalFunction::kDirectObject ||
                 functions[i] == GrammaticalFunction::kIndirectObject;
  }
  if (subject == functions.size() || !has_object) return OrderType::kOther;
  // The earliest object ahead of the subject is the fronted one.
  for (std::size_t i = 0; i < subject; ++i) {
    if (functions[i] == GrammaticalFunction::kDirectObject) return OrderType::kOsvDoFronted;
    if (functions[i] == GrammaticalFunction::kIndirectObject) return OrderType::kOsvIoFronted;
  }
  return OrderType::kSov;
}

OrderType classify_order_type(const OrderedSentence &sentence) {
  std::vector<GrammaticalFunction> fns;
  fns.reserve(sentence.constituents.size());
  for (const Constituent &c : sentence.constituents) fns.push_back(c.function);
  return classify_order(fns);
}

OrderedSentence make_reference(const DepTree &tree, const RelationMap &config) {
  OrderedSentence s;
  s.origin = Origin::kReference;
  s.reference_id = tree.sentence_id();
  s.tree = tree;
  s.tree.set_newdoc(false);
  s.tree.set_attribute("origin", "reference");
  s.constituents = extract_preverbal_constituents(tree, config);
  s.order_type = classify_order_type(s);
  s.tree.set_attribute("order_type", std::string(to_string(s.order_type)));
  s.permutation.resize(s.constituents.size());
  for (std::size_t i = 0; i < s.permutation.size(); ++i) s.permutation[i] = i;
  return s;
}

OrderedSentence describe_sentence(const DepTree &tree, const RelationMap &config) {
  OrderedSentence s;
  const std::string *origin = tree.attribute("origin");
  s.origin = origin ? parse_origin(*origin) : Origin::kReference;
  if (const std::string *ref = tree.attribute("ref_id")) {
    s.reference_id = *ref;
  } else if (s.origin == Origin::kVariant) {
    const auto pos = tree.sentence_id().rfind(".v");
    if (pos == std::string::npos)
      throw FormatError(tree.sentence_id() + ": variant without ref_id");
    s.reference_id = tree.sentence_id().substr(0, pos);
  } else {
    s.reference_id = tree.sentence_id();
  }
  s.tree = tree;
  s.constituents = extract_preverbal_constituents(tree, config);
  s.order_type = classify_order_type(s);
  return s;
}

namespace {

// Re-linearizes `tree` with its preverbal constituents in `order` (indices
// into `constituents`, which are in the tree's surface order).
DepTree relinearize(const DepTree &tree, std::span<const Constituent> constituents,
                    std::span<const std::size_t> order, std::string id) {
  const int n = static_cast<int>(tree.size());
  std::vector<int> old_at;  // old index for each new position
  old_at.reserve(static_cast<std::size_t>(n));
  for (std::size_t slot : order)
    for (int i = constituents[slot].first; i <= constituents[slot].last; ++i) old_at.push_back(i);
  for (int i = tree.root_index(); i <= n; ++i) old_at.push_back(i);
  // Tokens left of the root are exactly the constituent spans (projectivity).
  std::vector<int> new_of(static_cast<std::size_t>(n + 1), 0);
  for (std::size_t p = 0; p < old_at.size(); ++p)
    new_of[static_cast<std::size_t>(old_at[p])] = static_cast<int>(p + 1);

  std::vector<Token> tokens;
  tokens.reserve(old_at.size());
  for (std::size_t p = 0; p < old_at.size(); ++p) {
    Token t = tree.token(old_at[p]);
    t.index = static_cast<int>(p + 1);
    t.head = t.head == 0 ? 0 : new_of[static_cast<std::size_t>(t.head)];
    tokens.push_back(std::move(t));
  }
  return DepTree(std::move(id), std::move(tokens));
}

std::size_t saturating_mul(std::size_t a, std::size_t b) {
  if (a != 0 && b > std::numeric_limits<std::size_t>::max() / a)
    return std::numeric_limits<std::size_t>::max();
  return a * b;
}

// Arrangements beyond this many are sampled by rejection instead of being
// enumerated.
constexpr std::size_t kEnumerationLimit = 1'000'000;

}  // namespace

std::size_t count_arrangements(std::span<const Constituent> constituents) {
  std::map<std::string, std::size_t> multiplicity;
  for (const Constituent &c : constituents) ++multiplicity[c.text()];
  // n! / prod(m_i!) computed as a product of binomials to stay exact.
  std::size_t total = 1;
  std::size_t placed = 0;
  for (const auto &[text, m] : multiplicity) {
    // C(placed + m, m)
    std::size_t binom = 1;
    for (std::size_t i = 1; i <= m; ++i) {
      const std::size_t num = saturating_mul(binom, placed + i);
      if (num == std::numeric_limits<std::size_t>::max()) return num;
      binom = num / i;
    }
    placed += m;
    total = saturating_mul(total, binom);
  }
  return total;
}

std::vector<OrderedSentence> generate_variants(const DepTree &tree, const RelationMap &config,
                                               std::size_t cap, std::uint64_t seed) {
  const std::vector<Constituent> constituents = extract_preverbal_constituents(tree, config);
  const std::size_t n = constituents.size();
  if (n < 2)
    throw PreconditionError(tree.sentence_id() + ": need at least two preverbal constituents, found " +
                            std::to_string(n));
  if (cap == 0) throw PreconditionError("variant cap must be positive");

  // Constituents with identical text share a class; arrangements are
  // sequences of class ids.
  std::map<std::string, std::size_t> class_of_text;
  std::vector<std::size_t> original(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto [it, inserted] = class_of_text.emplace(constituents[i].text(), class_of_text.size());
    original[i] = it->second;
  }

  const std::size_t total = count_arrangements(constituents);
  std::vector<std::vector<std::size_t>> chosen;

  if (total <= kEnumerationLimit) {
    std::vector<std::vector<std::size_t>> all;
    std::vector<std::size_t> seq = original;
    std::sort(seq.begin(), seq.end());
    do {
      if (seq != original) all.push_back(seq);
    } while (std::next_permutation(seq.begin(), seq.end()));
    if (all.size() <= cap) {
      chosen = std::move(all);
    } else {
      // Selection sampling keeps enumeration order.
      Rng rng(seed);
      std::size_t needed = cap;
      for (std::size_t i = 0; i < all.size() && needed > 0; ++i) {
        const std::size_t remaining = all.size() - i;
        if (rng.uniform(remaining) < needed) {
          chosen.push_back(std::move(all[i]));
          --needed;
        }
      }
    }
  } else {
    if (cap > total / 2)
      throw PreconditionError(tree.sentence_id() + ": variant cap too large to sample by rejection");
    Rng rng(seed);
    std::set<std::vector<std::size_t>> picked;
    std::vector<std::size_t> seq = original;
    while (picked.size() < cap) {
      rng.shuffle(std::span<std::size_t>(seq));
      if (seq != original) picked.insert(seq);
    }
    chosen.assign(picked.begin(), picked.end());
  }

  std::vector<OrderedSentence> variants;
  variants.reserve(chosen.size());
  for (std::size_t k = 0; k < chosen.size(); ++k) {
    // Map each class id back to concrete constituents, first come first served.
    std::vector<std::deque<std::size_t>> members(class_of_text.size());
    for (std::size_t i = 0; i < n; ++i) members[original[i]].push_back(i);
    std::vector<std::size_t> order(n);
    std::vector<std::size_t> permutation(n);
    for (std::size_t slot = 0; slot < n; ++slot) {
      auto &queue = members[chosen[k][slot]];
      order[slot] = queue.front();
      permutation[queue.front()] = slot;
      queue.pop_front();
    }

    OrderedSentence v;
    v.origin = Origin::kVariant;
    v.reference_id = tree.sentence_id();
    v.tree = relinearize(tree, constituents, order, tree.sentence_id() + ".v" + std::to_string(k + 1));
    v.tree.set_attribute("origin", "variant");
    v.tree.set_attribute("ref_id", tree.sentence_id());
    v.permutation = std::move(permutation);
    int pos = 1;
    for (std::size_t slot = 0; slot < n; ++slot) {
      Constituent c = constituents[order[slot]];
      const int width = c.last - c.first;
      const int shift = pos - c.first;
      c.first = pos;
      c.last = pos + width;
      c.head_token += shift;
      for (Token &t : c.tokens) {
        t = v.tree.token(t.index + shift);
      }
      pos = c.last + 1;
      v.constituents.push_back(std::move(c));
    }
    v.order_type = classify_order_type(v);
    v.tree.set_attribute("order_type", std::string(to_string(v.order_type)));
    variants.push_back(std::move(v));
  }
  return variants;
}

bool OrderRuleSet::accepts(std::span<const std::string> labels) const {
  std::string_view prev = kBegin;
  for (const std::string &l : labels) {
    if (!contains(prev, l)) return false;
    prev = l;
  }
  return contains(prev, kEnd);
}

std::vector<std::string> constituent_labels(std::span<const Constituent> constituents) {
  std::vector<std::string> out;
  out.reserve(constituents.size());
  for (const Constituent &c : constituents) out.push_back(c.relation);
  return out;
}

OrderRuleSet learn_order_rules(std::span<const DepTree> trees, const RelationMap &config) {
  OrderRuleSet rules;
  for (const DepTree &tree : trees) {
    const auto labels = constituent_labels(extract_preverbal_constituents(tree, config));
    if (labels.empty()) continue;
    std::string_view prev = OrderRuleSet::kBegin;
    for (const std::string &l : labels) {
      rules.add(prev, l);
      prev = l;
    }
    rules.add(prev, OrderRuleSet::kEnd);
  }
  return rules;
}

std::vector<OrderedSentence> filter_grammatical(std::span<const OrderedSentence> variants,
                                                const OrderRuleSet &rules) {
  if (rules.empty()) throw ConfigError("empty order rule set");
  std::vector<OrderedSentence> kept;
  for (const OrderedSentence &v : variants)
    if (rules.accepts(constituent_labels(v.constituents))) kept.push_back(v);
  return kept;
}

void write_ordered_sentence(std::ostream &out, const OrderedSentence &sentence) {
  DepTree tree = sentence.tree;
  tree.set_attribute("origin", std::string(to_string(sentence.origin)));
  if (sentence.origin == Origin::kVariant) tree.set_attribute("ref_id", sentence.reference_id);
  tree.set_attribute("order_type", std::string(to_string(sentence.order_type)));
  write_tree(out, tree);
}

}  // namespace wordorder
