// Treebank-scheme configuration: which relation labels mark grammatical
// functions, which POS tags count as finite verbs, pronouns, content words
// and punctuation.
//
// The file format is one `key = value` entry per line, values being
// whitespace-separated lists; `#` starts a comment. Unknown keys are an error.
//
//   subject            = k1
//   direct_object      = k2
//   indirect_object    = k4
//   finite_verb_tags   = VM VAUX
//   finiteness_feature = VerbForm
//   finite_values      = Fin
//   pronoun_tags       = PRP
//   content_tags       = NN NNP JJ RB VM
//   punct_tags         = SYM
//   exclude_punct      = true
//   interrogative_forms = ? !
//   interrogative_tags  = WQ

#ifndef WORDORDER_RELATION_MAP_H_
#define WORDORDER_RELATION_MAP_H_

#include <istream>
#include <set>
#include <string>
#include <string_view>

namespace wordorder {

enum class GrammaticalFunction { kSubject, kDirectObject, kIndirectObject, kOther };

std::string_view to_string(GrammaticalFunction f);

struct RelationMap {
  std::set<std::string> subject_relations{"k1"};
  std::set<std::string> direct_object_relations{"k2"};
  std::set<std::string> indirect_object_relations{"k4"};

  // Matched against both the coarse and the fine POS column.
  std::set<std::string> finite_verb_tags{"VM", "VAUX", "VERB", "AUX"};
  // When a token carries `<finiteness_feature>=<v>` in its features column,
  // it is finite only if v is in finite_values. Empty feature name disables
  // the check.
  std::string finiteness_feature{"VerbForm"};
  std::set<std::string> finite_values{"Fin"};

  std::set<std::string> pronoun_tags{"PRP", "PRON"};
  std::set<std::string> content_tags{"NN",  "NNP", "NNC", "JJ",   "RB",    "VM",
                                     "NOUN", "PROPN", "ADJ", "ADV", "VERB"};
  std::set<std::string> punct_tags{"SYM", "PUNCT"};
  bool exclude_punct = true;

  // Token forms that make a sentence non-declarative, and POS or relation
  // labels flagged as interrogative.
  std::set<std::string> interrogative_forms{"?", "!", "\xD8\x9F"};  // ? ! ؟
  std::set<std::string> interrogative_tags{"WQ"};

  GrammaticalFunction function_of(std::string_view relation) const;

  bool is_finite_verb(std::string_view coarse_pos, std::string_view fine_pos,
                      std::string_view features) const;
  bool is_pronoun(std::string_view coarse_pos, std::string_view fine_pos) const;
  bool is_content(std::string_view coarse_pos, std::string_view fine_pos) const;
  bool is_punct(std::string_view coarse_pos, std::string_view fine_pos) const;

  static RelationMap parse(std::istream &in);
  static RelationMap load(const std::string &path);
  // Canonical key-value rendering; parse(serialize()) reproduces the map.
  std::string serialize() const;
};

}  // namespace wordorder

#endif  // WORDORDER_RELATION_MAP_H_
