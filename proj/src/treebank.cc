#include "wordorder/treebank.h"

#include <algorithm>
#include <fstream>

#include "text_util.h"
#include "wordorder/errors.h"

namespace wordorder {

const std::string &Token::lemma_or_form() const {
  return (lemma.empty() || lemma == "_") ? form : lemma;
}

DepTree::DepTree(std::string sentence_id, std::vector<Token> tokens)
    : sentence_id_(std::move(sentence_id)), tokens_(std::move(tokens)) {
  if (tokens_.empty()) throw StructureError(sentence_id_, "empty sentence");
  const int n = static_cast<int>(tokens_.size());
  for (int i = 0; i < n; ++i) {
    const Token &t = tokens_[static_cast<std::size_t>(i)];
    if (t.index != i + 1)
      throw StructureError(sentence_id_, "token indices are not contiguous at position " +
                                             std::to_string(i + 1));
    if (t.head < 0 || t.head > n)
      throw StructureError(sentence_id_, "token " + std::to_string(t.index) + " has head " +
                                             std::to_string(t.head) + " outside the sentence");
    if (t.head == t.index)
      throw StructureError(sentence_id_, "token " + std::to_string(t.index) + " heads itself");
    if (t.relation.empty())
      throw StructureError(sentence_id_, "token " + std::to_string(t.index) + " has no relation");
    if (t.head == 0) {
      if (root_index_ != 0) throw StructureError(sentence_id_, "multiple roots");
      root_index_ = t.index;
    }
  }
  if (root_index_ == 0) throw StructureError(sentence_id_, "no root (cyclic head structure)");
  // Every token must reach the root in at most n steps.
  for (const Token &t : tokens_) {
    int cur = t.index;
    int steps = 0;
    while (cur != 0 && steps <= n) {
      cur = token(cur).head;
      ++steps;
    }
    if (cur != 0) throw StructureError(sentence_id_, "cycle through token " + std::to_string(t.index));
  }
}

std::vector<int> DepTree::dependents(int head) const {
  std::vector<int> out;
  for (const Token &t : tokens_)
    if (t.head == head) out.push_back(t.index);
  return out;
}

bool DepTree::dominates(int ancestor, int descendant) const {
  if (ancestor == 0) return true;
  int cur = descendant;
  while (cur != 0) {
    if (cur == ancestor) return true;
    cur = token(cur).head;
  }
  return false;
}

std::pair<int, int> DepTree::subtree_span(int index) const {
  int lo = index;
  int hi = index;
  for (const Token &t : tokens_) {
    if (dominates(index, t.index)) {
      lo = std::min(lo, t.index);
      hi = std::max(hi, t.index);
    }
  }
  return {lo, hi};
}

const std::string *DepTree::attribute(std::string_view key) const {
  for (const auto &[k, v] : attributes_)
    if (k == key) return &v;
  return nullptr;
}

void DepTree::set_attribute(const std::string &key, const std::string &value) {
  for (auto &[k, v] : attributes_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  attributes_.emplace_back(key, value);
}

std::string DepTree::text() const {
  std::vector<std::string_view> forms;
  forms.reserve(tokens_.size());
  for (const Token &t : tokens_) forms.push_back(t.form);
  return internal::join(forms, " ");
}

namespace {

struct PendingSentence {
  std::string id;
  bool newdoc = false;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<Token> tokens;
};

void handle_comment(std::string_view line, PendingSentence &s) {
  std::string_view body = internal::trim(line.substr(1));
  if (body.starts_with("newdoc")) {
    s.newdoc = true;
    return;
  }
  const auto eq = body.find('=');
  if (eq == std::string_view::npos) return;  // free-form comment
  const std::string key(internal::trim(body.substr(0, eq)));
  const std::string value(internal::trim(body.substr(eq + 1)));
  if (key == "sent_id") {
    s.id = value;
  } else if (!key.empty() && key.find(' ') == std::string::npos) {
    s.attributes.emplace_back(key, value);
  }
}

Token parse_token(std::size_t line_no,
                  const std::vector<std::string_view> &fields) {
  const auto field = [&](std::size_t i) {
    return fields[i].empty() ? std::string("_") : std::string(fields[i]);
  };
  Token t;
  const auto index = internal::parse_int(fields[0]);
  if (!index) throw ParseError(line_no, "non-numeric token index '" + std::string(fields[0]) + "'");
  const auto head = internal::parse_int(fields[6]);
  if (!head) throw ParseError(line_no, "non-numeric head '" + std::string(fields[6]) + "'");
  if (*index < 1) throw ParseError(line_no, "token index must be >= 1");
  if (*head < 0) throw ParseError(line_no, "head must be >= 0");
  t.index = static_cast<int>(*index);
  t.head = static_cast<int>(*head);
  t.form = field(1);
  t.lemma = field(2);
  t.coarse_pos = field(3);
  t.fine_pos = field(4);
  t.features = field(5);
  t.relation = std::string(fields[7]);
  if (t.relation.empty() || t.relation == "_") throw ParseError(line_no, "missing relation label");
  t.deps = field(8);
  t.misc = field(9);
  return t;
}

}  // namespace

std::vector<DepTree> parse_treebank(std::istream &in) {
  std::vector<DepTree> trees;
  PendingSentence pending;
  std::size_t counter = 0;
  bool carry_newdoc = false;

  const auto flush = [&]() {
    if (pending.tokens.empty()) {
      // A comment-only block (e.g. `# newdoc` on its own) applies to the
      // next sentence.
      carry_newdoc = carry_newdoc || pending.newdoc;
      pending = PendingSentence{};
      return;
    }
    ++counter;
    std::string id = pending.id.empty() ? std::to_string(counter) : pending.id;
    DepTree tree(std::move(id), std::move(pending.tokens));
    tree.set_newdoc(pending.newdoc || carry_newdoc);
    tree.attributes() = std::move(pending.attributes);
    trees.push_back(std::move(tree));
    carry_newdoc = false;
    pending = PendingSentence{};
  };

  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    const std::string_view line = raw;
    if (internal::trim(line).empty()) {
      flush();
      continue;
    }
    if (line.front() == '#') {
      handle_comment(line, pending);
      continue;
    }
    const auto fields = internal::split(line, '\t');
    if (fields.size() != 10)
      throw ParseError(line_no, "expected 10 tab-separated columns, found " +
                                    std::to_string(fields.size()));
    if (fields[0].find('-') != std::string_view::npos || fields[0].find('.') != std::string_view::npos)
      continue;  // multi-word token range or empty node
    pending.tokens.push_back(parse_token(line_no, fields));
  }
  flush();
  return trees;
}

std::vector<DepTree> load_treebank(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open treebank '" + path + "'");
  return parse_treebank(in);
}

void write_tree(std::ostream &out, const DepTree &tree) {
  if (tree.newdoc()) out << "# newdoc\n";
  out << "# sent_id = " << tree.sentence_id() << '\n';
  for (const auto &[k, v] : tree.attributes()) out << "# " << k << " = " << v << '\n';
  for (const Token &t : tree.tokens()) {
    out << t.index << '\t' << t.form << '\t' << t.lemma << '\t' << t.coarse_pos << '\t'
        << t.fine_pos << '\t' << t.features << '\t' << t.head << '\t' << t.relation << '\t'
        << t.deps << '\t' << t.misc << '\n';
  }
  out << '\n';
}

void write_treebank(std::ostream &out, std::span<const DepTree> trees) {
  for (const DepTree &t : trees) write_tree(out, t);
}

bool is_projective(const DepTree &tree) {
  for (const Token &t : tree.tokens()) {
    if (t.head == 0) continue;
    const int lo = std::min(t.head, t.index);
    const int hi = std::max(t.head, t.index);
    for (int k = lo + 1; k < hi; ++k)
      if (!tree.dominates(t.head, k)) return false;
  }
  return true;
}

std::string_view to_string(EligibilityFailure f) {
  switch (f) {
    case EligibilityFailure::kNoSubject: return "NO_SUBJECT";
    case EligibilityFailure::kNoObject: return "NO_OBJECT";
    case EligibilityFailure::kNonProjective: return "NON_PROJECTIVE";
    case EligibilityFailure::kNonDeclarative: return "NON_DECLARATIVE";
    case EligibilityFailure::kRootNotFiniteVerb: return "ROOT_NOT_FINITE_VERB";
    case EligibilityFailure::kFewerThanTwoPreverbal: return "FEWER_THAN_TWO_PREVERBAL";
  }
  return "?";
}

EligibilityReport check_eligibility(const DepTree &tree, const RelationMap &config) {
  EligibilityReport report;
  const auto fail = [&](EligibilityFailure f) {
    report.eligible = false;
    report.reasons.push_back(f);
  };

  const int root = tree.root_index();
  bool has_subject = false;
  bool has_object = false;
  int preverbal = 0;
  for (int d : tree.dependents(root)) {
    const auto fn = config.function_of(tree.token(d).relation);
    has_subject = has_subject || fn == GrammaticalFunction::kSubject;
    has_object = has_object || fn == GrammaticalFunction::kDirectObject ||
                 fn == GrammaticalFunction::kIndirectObject;
    if (d < root) ++preverbal;
  }
  if (!has_subject) fail(EligibilityFailure::kNoSubject);
  if (!has_object) fail(EligibilityFailure::kNoObject);
  if (!is_projective(tree)) fail(EligibilityFailure::kNonProjective);

  bool declarative = true;
  for (const Token &t : tree.tokens()) {
    if (config.interrogative_forms.contains(t.form) || config.interrogative_tags.contains(t.coarse_pos) ||
        config.interrogative_tags.contains(t.fine_pos) || config.interrogative_tags.contains(t.relation)) {
      declarative = false;
      break;
    }
  }
  if (!declarative) fail(EligibilityFailure::kNonDeclarative);

  const Token &r = tree.token(root);
  if (!config.is_finite_verb(r.coarse_pos, r.fine_pos, r.features))
    fail(EligibilityFailure::kRootNotFiniteVerb);
  if (preverbal < 2) fail(EligibilityFailure::kFewerThanTwoPreverbal);
  return report;
}

std::vector<const DepTree *> preceding_sentences(std::span<const DepTree> trees) {
  std::vector<const DepTree *> out(trees.size(), nullptr);
  for (std::size_t i = 1; i < trees.size(); ++i)
    if (!trees[i].newdoc()) out[i] = &trees[i - 1];
  return out;
}

}  // namespace wordorder
