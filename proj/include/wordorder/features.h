// Per-sentence predictors: dependency length, information-status score,
// trigram surprisal, and PCFG / adaptive-LSTM surprisal ingested from sidecar
// files produced by external models.

#ifndef WORDORDER_FEATURES_H_
#define WORDORDER_FEATURES_H_

#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "wordorder/ngram.h"
#include "wordorder/relation_map.h"
#include "wordorder/treebank.h"
#include "wordorder/variants.h"

namespace wordorder {

struct FeatureVector {
  long long dependency_length = 0;
  int is_score = 0;
  double trigram_surprisal = 0.0;
  std::optional<double> pcfg_surprisal;
  std::optional<double> adaptive_lstm_surprisal;

  bool operator==(const FeatureVector &) const = default;
};

struct DiscoursePair {
  std::vector<Token> context;  // preceding sentence; empty at document start
  OrderedSentence target;
};

// Sum over arcs of the number of words strictly between head and dependent.
// With config.exclude_punct, arcs touching punctuation are dropped and
// punctuation does not count as intervening.
long long dependency_length(const DepTree &tree, const RelationMap &config = {});

enum class InformationStatus { kGiven, kNew };
std::string_view to_string(InformationStatus s);

struct InformationStatusAnnotation {
  int score = 0;  // +1 given-before-new, -1 new-before-given, 0 otherwise
  InformationStatus subject = InformationStatus::kNew;
  InformationStatus object = InformationStatus::kNew;
  GrammaticalFunction object_function = GrammaticalFunction::kDirectObject;
  bool subject_first = true;
};

// A constituent is given when one of its content-word lemmas occurs among
// the context's content-word lemmas, or when its head is a pronoun. The
// subject and object are the first subject-labelled and the first
// direct-object-labelled (else indirect-object-labelled) dependents of the
// root. Throws AnnotationError when either is missing.
InformationStatusAnnotation annotate_information_status(const DiscoursePair &pair,
                                                        const RelationMap &config);

// Rows of a per-token surprisal sidecar, grouped by sentence.
struct SurprisalSidecar {
  std::string source;
  double log_base = 2.0;
  // sentence_id -> (token_index, surprisal in bits)
  std::unordered_map<std::string, std::vector<std::pair<int, double>>> rows;
};

// Requires a `# log_base: <b>` header line (2, e, 10 or a number); values
// are converted to bits. Throws FormatError / ParseError.
SurprisalSidecar read_sidecar(std::istream &in);

// sentence_id -> total surprisal (bits). Sentences missing from the sidecar
// are absent from the map. Throws AlignmentError when a sentence's rows do
// not cover its tokens 1..n exactly once.
using SurprisalTotals = std::unordered_map<std::string, double>;
SurprisalTotals align_surprisal(const SurprisalSidecar &sidecar,
                                std::span<const OrderedSentence> sentences);
SurprisalTotals load_external_surprisal(std::istream &sidecar,
                                        std::span<const OrderedSentence> sentences);

struct SurprisalSources {
  const SurprisalTotals *pcfg = nullptr;
  const SurprisalTotals *adaptive_lstm = nullptr;
};

std::vector<std::string> surface_forms(const DepTree &tree);

FeatureVector featurize(const DiscoursePair &pair, const TrigramModel &model,
                        const RelationMap &config, const SurprisalSources &sidecars = {});

struct FeatureRow {
  std::string sentence_id;
  std::string reference_id;
  Origin origin = Origin::kReference;
  OrderType order_type = OrderType::kOther;
  FeatureVector features;
};

// Tab-separated: sentence_id origin order_type deplen is trigram pcfg lstm.
// Absent values are written as NA. `header_lines` are emitted as `# ` lines.
void write_feature_table(std::ostream &out, std::span<const FeatureRow> rows,
                         std::span<const std::string> header_lines = {});
std::vector<FeatureRow> read_feature_table(std::istream &in);

}  // namespace wordorder

#endif  // WORDORDER_FEATURES_H_
