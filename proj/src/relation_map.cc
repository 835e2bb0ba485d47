#include "wordorder/relation_map.h"

#include <fstream>
#include <sstream>

#include "text_util.h"
#include "wordorder/errors.h"

namespace wordorder {

namespace {

bool contains(const std::set<std::string> &s, std::string_view v) {
  return s.find(std::string(v)) != s.end();
}

std::set<std::string> to_set(std::string_view value) {
  std::set<std::string> out;
  for (auto part : internal::split_whitespace(value)) out.emplace(part);
  return out;
}

bool parse_bool(std::string_view v, std::size_t line) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ParseError(line, "expected boolean, got '" + std::string(v) + "'");
}

}  // namespace

std::string_view to_string(GrammaticalFunction f) {
  switch (f) {
    case GrammaticalFunction::kSubject: return "SUBJECT";
    case GrammaticalFunction::kDirectObject: return "DIRECT_OBJECT";
    case GrammaticalFunction::kIndirectObject: return "INDIRECT_OBJECT";
    case GrammaticalFunction::kOther: return "OTHER";
  }
  return "OTHER";
}

GrammaticalFunction RelationMap::function_of(std::string_view relation) const {
  if (contains(subject_relations, relation)) return GrammaticalFunction::kSubject;
  if (contains(direct_object_relations, relation)) return GrammaticalFunction::kDirectObject;
  if (contains(indirect_object_relations, relation)) return GrammaticalFunction::kIndirectObject;
  return GrammaticalFunction::kOther;
}

bool RelationMap::is_finite_verb(std::string_view coarse_pos, std::string_view fine_pos,
                                 std::string_view features) const {
  if (!contains(finite_verb_tags, coarse_pos) && !contains(finite_verb_tags, fine_pos)) return false;
  if (finiteness_feature.empty() || features.empty() || features == "_") return true;
  for (auto kv : internal::split(features, '|')) {
    const auto eq = kv.find('=');
    if (eq == std::string_view::npos) continue;
    if (kv.substr(0, eq) == finiteness_feature) return contains(finite_values, kv.substr(eq + 1));
  }
  return true;
}

bool RelationMap::is_pronoun(std::string_view coarse_pos, std::string_view fine_pos) const {
  return contains(pronoun_tags, coarse_pos) || contains(pronoun_tags, fine_pos);
}

bool RelationMap::is_content(std::string_view coarse_pos, std::string_view fine_pos) const {
  return contains(content_tags, coarse_pos) || contains(content_tags, fine_pos);
}

bool RelationMap::is_punct(std::string_view coarse_pos, std::string_view fine_pos) const {
  return contains(punct_tags, coarse_pos) || contains(punct_tags, fine_pos);
}

RelationMap RelationMap::parse(std::istream &in) {
  RelationMap m;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = internal::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected 'key = value'");
    const auto key = internal::trim(line.substr(0, eq));
    const auto value = internal::trim(line.substr(eq + 1));
    if (key == "subject") m.subject_relations = to_set(value);
    else if (key == "direct_object") m.direct_object_relations = to_set(value);
    else if (key == "indirect_object") m.indirect_object_relations = to_set(value);
    else if (key == "finite_verb_tags") m.finite_verb_tags = to_set(value);
    else if (key == "finiteness_feature") m.finiteness_feature = std::string(value);
    else if (key == "finite_values") m.finite_values = to_set(value);
    else if (key == "pronoun_tags") m.pronoun_tags = to_set(value);
    else if (key == "content_tags") m.content_tags = to_set(value);
    else if (key == "punct_tags") m.punct_tags = to_set(value);
    else if (key == "exclude_punct") m.exclude_punct = parse_bool(value, line_no);
    else if (key == "interrogative_forms") m.interrogative_forms = to_set(value);
    else if (key == "interrogative_tags") m.interrogative_tags = to_set(value);
    else throw ParseError(line_no, "unknown key '" + std::string(key) + "'");
  }
  if (m.subject_relations.empty() ||
      (m.direct_object_relations.empty() && m.indirect_object_relations.empty()))
    throw ConfigError("relation map needs subject and object relations");
  return m;
}

RelationMap RelationMap::load(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open relation map '" + path + "'");
  return parse(in);
}

std::string RelationMap::serialize() const {
  std::ostringstream out;
  const auto put = [&](const char *key, const std::set<std::string> &values) {
    out << key << " = " << internal::join(values, " ") << '\n';
  };
  put("subject", subject_relations);
  put("direct_object", direct_object_relations);
  put("indirect_object", indirect_object_relations);
  put("finite_verb_tags", finite_verb_tags);
  out << "finiteness_feature = " << finiteness_feature << '\n';
  put("finite_values", finite_values);
  put("pronoun_tags", pronoun_tags);
  put("content_tags", content_tags);
  put("punct_tags", punct_tags);
  out << "exclude_punct = " << (exclude_punct ? "true" : "false") << '\n';
  put("interrogative_forms", interrogative_forms);
  put("interrogative_tags", interrogative_tags);
  return out.str();
}

}  // namespace wordorder
