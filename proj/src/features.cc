#include "wordorder/features.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "text_util.h"
#include "wordorder/errors.h"

namespace wordorder {

long long dependency_length(const DepTree &tree, const RelationMap &config) {
  const std::size_t n = tree.size();
  // words_before[i] = countable tokens at positions < i.
  std::vector<long long> words_before(n + 2, 0);
  std::vector<bool> skip(n + 1, false);
  for (std::size_t i = 1; i <= n; ++i) {
    const Token &t = tree.token(static_cast<int>(i));
    skip[i] = config.exclude_punct && config.is_punct(t.coarse_pos, t.fine_pos);
    words_before[i + 1] = words_before[i] + (skip[i] ? 0 : 1);
  }
  long long total = 0;
  for (const Token &t : tree.tokens()) {
    if (t.head == 0) continue;
    const auto d = static_cast<std::size_t>(t.index);
    const auto h = static_cast<std::size_t>(t.head);
    if (skip[d] || skip[h]) continue;
    const std::size_t lo = std::min(d, h);
    const std::size_t hi = std::max(d, h);
    total += words_before[hi] - words_before[lo + 1];
  }
  return total;
}

std::string_view to_string(InformationStatus s) {
  return s == InformationStatus::kGiven ? "GIVEN" : "NEW";
}

namespace {

InformationStatus status_of(const DepTree &tree, int head, const std::set<std::string> &context_lemmas,
                            const RelationMap &config) {
  const Token &h = tree.token(head);
  if (config.is_pronoun(h.coarse_pos, h.fine_pos)) return InformationStatus::kGiven;
  const auto [first, last] = tree.subtree_span(head);
  for (int i = first; i <= last; ++i) {
    const Token &t = tree.token(i);
    if (config.is_content(t.coarse_pos, t.fine_pos) && context_lemmas.contains(t.lemma_or_form()))
      return InformationStatus::kGiven;
  }
  return InformationStatus::kNew;
}

}  // namespace

InformationStatusAnnotation annotate_information_status(const DiscoursePair &pair,
                                                        const RelationMap &config) {
  const DepTree &tree = pair.target.tree;
  int subject = 0;
  int direct_object = 0;
  int indirect_object = 0;
  for (int d : tree.dependents(tree.root_index())) {
    switch (config.function_of(tree.token(d).relation)) {
      case GrammaticalFunction::kSubject: if (!subject) subject = d; break;
      case GrammaticalFunction::kDirectObject: if (!direct_object) direct_object = d; break;
      case GrammaticalFunction::kIndirectObject: if (!indirect_object) indirect_object = d; break;
      case GrammaticalFunction::kOther: break;
    }
  }
  if (!subject) throw AnnotationError(tree.sentence_id() + ": no subject constituent");
  const int object = direct_object ? direct_object : indirect_object;
  if (!object) throw AnnotationError(tree.sentence_id() + ": no object constituent");

  std::set<std::string> context_lemmas;
  for (const Token &t : pair.context)
    if (config.is_content(t.coarse_pos, t.fine_pos)) context_lemmas.insert(t.lemma_or_form());

  InformationStatusAnnotation a;
  a.object_function = direct_object ? GrammaticalFunction::kDirectObject
                                    : GrammaticalFunction::kIndirectObject;
  a.subject = status_of(tree, subject, context_lemmas, config);
  a.object = status_of(tree, object, context_lemmas, config);
  a.subject_first = tree.subtree_span(subject).first < tree.subtree_span(object).first;
  const InformationStatus first = a.subject_first ? a.subject : a.object;
  const InformationStatus second = a.subject_first ? a.object : a.subject;
  if (first == second) a.score = 0;
  else a.score = first == InformationStatus::kGiven ? 1 : -1;
  return a;
}

SurprisalSidecar read_sidecar(std::istream &in) {
  SurprisalSidecar sidecar;
  bool have_base = false;
  double to_bits = 1.0;
  std::set<std::pair<std::string, int>> seen;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    std::string_view line = raw;
    if (internal::trim(line).empty()) continue;
    if (line.front() == '#') {
      const auto body = internal::trim(line.substr(1));
      const auto colon = body.find(':');
      if (colon == std::string_view::npos) continue;
      const auto key = internal::trim(body.substr(0, colon));
      const auto value = internal::trim(body.substr(colon + 1));
      if (key == "log_base") {
        if (value == "e") {
          sidecar.log_base = std::numbers::e;
        } else if (const auto b = internal::parse_double(value); b && *b > 1.0) {
          sidecar.log_base = *b;
        } else {
          throw FormatError("unsupported log base '" + std::string(value) + "'");
        }
        to_bits = std::log2(sidecar.log_base);
        have_base = true;
      } else if (key == "source") {
        sidecar.source = std::string(value);
      }
      continue;
    }
    if (!have_base) throw FormatError("sidecar rows before a '# log_base:' declaration");
    const auto fields = internal::split(line, '\t');
    if (fields.size() != 3)
      throw ParseError(line_no, "expected sentence_id<TAB>token_index<TAB>surprisal");
    const auto index = internal::parse_int(fields[1]);
    const auto value = internal::parse_double(fields[2]);
    if (!index || *index < 1) throw ParseError(line_no, "bad token index");
    if (!value || !std::isfinite(*value) || *value < 0) throw ParseError(line_no, "bad surprisal value");
    std::string id(fields[0]);
    if (!seen.emplace(id, static_cast<int>(*index)).second)
      throw AlignmentError(id, "token " + std::to_string(*index) + " listed twice");
    sidecar.rows[id].emplace_back(static_cast<int>(*index), *value * to_bits);
  }
  if (!have_base) throw FormatError("sidecar does not declare '# log_base:'");
  return sidecar;
}

SurprisalTotals align_surprisal(const SurprisalSidecar &sidecar,
                                std::span<const OrderedSentence> sentences) {
  SurprisalTotals totals;
  for (const OrderedSentence &s : sentences) {
    const auto it = sidecar.rows.find(s.id());
    if (it == sidecar.rows.end()) continue;
    const std::size_t n = s.tree.size();
    if (it->second.size() != n)
      throw AlignmentError(s.id(), "sidecar has " + std::to_string(it->second.size()) +
                                       " rows for " + std::to_string(n) + " tokens");
    double total = 0;
    for (const auto &[index, value] : it->second) {
      if (index < 1 || static_cast<std::size_t>(index) > n)
        throw AlignmentError(s.id(), "token index " + std::to_string(index) + " out of range");
      total += value;
    }
    totals.emplace(s.id(), total);
  }
  return totals;
}

SurprisalTotals load_external_surprisal(std::istream &sidecar,
                                        std::span<const OrderedSentence> sentences) {
  return align_surprisal(read_sidecar(sidecar), sentences);
}

std::vector<std::string> surface_forms(const DepTree &tree) {
  std::vector<std::string> out;
  out.reserve(tree.size());
  for (const Token &t : tree.tokens()) out.push_back(t.form);
  return out;
}

FeatureVector featurize(const DiscoursePair &pair, const TrigramModel &model,
                        const RelationMap &config, const SurprisalSources &sidecars) {
  FeatureVector f;
  f.dependency_length = dependency_length(pair.target.tree, config);
  f.is_score = annotate_information_status(pair, config).score;
  f.trigram_surprisal = sentence_surprisal(model, surface_forms(pair.target.tree));
  const auto lookup = [&](const SurprisalTotals *totals) -> std::optional<double> {
    if (!totals) return std::nullopt;
    const auto it = totals->find(pair.target.id());
    if (it == totals->end()) return std::nullopt;
    return it->second;
  };
  f.pcfg_surprisal = lookup(sidecars.pcfg);
  f.adaptive_lstm_surprisal = lookup(sidecars.adaptive_lstm);
  return f;
}

void write_feature_table(std::ostream &out, std::span<const FeatureRow> rows,
                         std::span<const std::string> header_lines) {
  for (const std::string &h : header_lines) out << "# " << h << '\n';
  out << "sentence_id\torigin\torder_type\tdeplen\tis\ttrigram\tpcfg\tlstm\n";
  const auto opt = [](const std::optional<double> &v) {
    return v ? internal::format_double(*v) : std::string("NA");
  };
  for (const FeatureRow &r : rows) {
    out << r.sentence_id << '\t' << to_string(r.origin) << '\t' << to_string(r.order_type) << '\t'
        << r.features.dependency_length << '\t' << r.features.is_score << '\t'
        << internal::format_double(r.features.trigram_surprisal) << '\t'
        << opt(r.features.pcfg_surprisal) << '\t' << opt(r.features.adaptive_lstm_surprisal) << '\n';
  }
}

std::vector<FeatureRow> read_feature_table(std::istream &in) {
  std::vector<FeatureRow> rows;
  std::string raw;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, raw)) {
    ++line_no;
    if (raw.empty() || raw.front() == '#') continue;
    const auto fields = internal::split(raw, '\t');
    if (!header_seen) {
      if (fields.size() != 8 || fields[0] != "sentence_id")
        throw ParseError(line_no, "missing feature table header");
      header_seen = true;
      continue;
    }
    if (fields.size() != 8) throw ParseError(line_no, "expected 8 columns");
    FeatureRow r;
    r.sentence_id = std::string(fields[0]);
    r.origin = parse_origin(fields[1]);
    r.order_type = parse_order_type(fields[2]);
    const auto deplen = internal::parse_int(fields[3]);
    const auto is = internal::parse_int(fields[4]);
    const auto tri = internal::parse_double(fields[5]);
    if (!deplen || !is || !tri) throw ParseError(line_no, "malformed feature values");
    r.features.dependency_length = *deplen;
    r.features.is_score = static_cast<int>(*is);
    r.features.trigram_surprisal = *tri;
    const auto opt = [&](std::string_view s) -> std::optional<double> {
      if (s == "NA") return std::nullopt;
      const auto v = internal::parse_double(s);
      if (!v) throw ParseError(line_no, "malformed surprisal '" + std::string(s) + "'");
      return v;
    };
    r.features.pcfg_surprisal = opt(fields[6]);
    r.features.adaptive_lstm_surprisal = opt(fields[7]);
    if (r.origin == Origin::kVariant) {
      const auto pos = r.sentence_id.rfind(".v");
      if (pos == std::string::npos) throw ParseError(line_no, "variant id lacks '.v<k>' suffix");
      r.reference_id = r.sentence_id.substr(0, pos);
    } else {
      r.reference_id = r.sentence_id;
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace wordorder
