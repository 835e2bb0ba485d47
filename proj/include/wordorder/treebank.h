// Dependency treebank ingestion and sentence selection.
//
// Input is the 10-column tab-separated CoNLL format (ID FORM LEMMA CPOS POS
// FEATS HEAD DEPREL DEPS MISC). Sentences are separated by blank lines and
// `#` lines are comments; `# sent_id = X` names a sentence and `# newdoc`
// opens a new document. Multi-word token ranges (`3-4`) and empty nodes
// (`3.1`) are skipped.

#ifndef WORDORDER_TREEBANK_H_
#define WORDORDER_TREEBANK_H_

#include <cstddef>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wordorder/relation_map.h"

namespace wordorder {

struct Token {
  int index = 0;  // 1-based position
  std::string form;
  std::string lemma;
  std::string coarse_pos;
  std::string fine_pos;
  std::string features;
  int head = 0;  // 0 = root
  std::string relation;
  std::string deps = "_";
  std::string misc = "_";

  // Lemma, falling back to the surface form when the lemma column is empty.
  const std::string &lemma_or_form() const;

  bool operator==(const Token &) const = default;
};

// A validated dependency tree. Construction checks that indices are
// contiguous 1..n, exactly one token attaches to 0 and that every token
// reaches the root; violations raise StructureError.
class DepTree {
 public:
  DepTree() = default;
  DepTree(std::string sentence_id, std::vector<Token> tokens);

  const std::string &sentence_id() const { return sentence_id_; }
  const std::vector<Token> &tokens() const { return tokens_; }
  std::size_t size() const { return tokens_.size(); }
  int root_index() const { return root_index_; }

  // 1-based access.
  const Token &token(int index) const { return tokens_[static_cast<std::size_t>(index - 1)]; }

  // Indices of the direct dependents of `head` in surface order (0 = root).
  std::vector<int> dependents(int head) const;
  // [first, last] surface span of the subtree rooted at `index`.
  std::pair<int, int> subtree_span(int index) const;
  bool dominates(int ancestor, int descendant) const;

  // Ordered `# key = value` comments other than sent_id (e.g. origin).
  std::vector<std::pair<std::string, std::string>> &attributes() { return attributes_; }
  const std::vector<std::pair<std::string, std::string>> &attributes() const { return attributes_; }
  const std::string *attribute(std::string_view key) const;
  void set_attribute(const std::string &key, const std::string &value);

  bool newdoc() const { return newdoc_; }
  void set_newdoc(bool v) { newdoc_ = v; }

  std::string text() const;  // forms joined by single spaces

  bool operator==(const DepTree &) const = default;

 private:
  std::string sentence_id_;
  std::vector<Token> tokens_;
  int root_index_ = 0;
  bool newdoc_ = false;
  std::vector<std::pair<std::string, std::string>> attributes_;
};

std::vector<DepTree> parse_treebank(std::istream &in);
std::vector<DepTree> load_treebank(const std::string &path);

void write_tree(std::ostream &out, const DepTree &tree);
void write_treebank(std::ostream &out, std::span<const DepTree> trees);

bool is_projective(const DepTree &tree);

enum class EligibilityFailure {
  kNoSubject,
  kNoObject,
  kNonProjective,
  kNonDeclarative,
  kRootNotFiniteVerb,
  kFewerThanTwoPreverbal,
};

std::string_view to_string(EligibilityFailure f);

struct EligibilityReport {
  bool eligible = true;
  std::vector<EligibilityFailure> reasons;

  bool operator==(const EligibilityReport &) const = default;
};

EligibilityReport check_eligibility(const DepTree &tree, const RelationMap &config);

// For each tree, the sentence preceding it in the same document, or nullptr
// when the tree opens a document (first tree or `# newdoc`).
std::vector<const DepTree *> preceding_sentences(std::span<const DepTree> trees);

}  // namespace wordorder

#endif  // WORDORDER_TREEBANK_H_
