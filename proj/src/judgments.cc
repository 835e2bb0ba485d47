#include "wordorder/judgments.h"

#include <algorithm>
#include <numeric>

#include "text_util.h"
#include "wordorder/errors.h"
#include "wordorder/random.h"

namespace wordorder {

using nlohmann::ordered_json;

std::vector<JudgmentItem> export_judgment_items(std::span<const PairCandidate> pool, std::size_t n,
                                                std::uint64_t seed) {
  if (n > pool.size())
    throw UsageError("requested " + std::to_string(n) + " items but only " + std::to_string(pool.size()) +
                     " pairs are available");
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  // Partial Fisher-Yates: the first n slots are a uniform sample.
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.uniform(pool.size() - i));
    std::swap(order[i], order[j]);
  }
  std::vector<JudgmentItem> items;
  items.reserve(n);
  const std::size_t digits = std::max<std::size_t>(4, std::to_string(n).size());
  for (std::size_t i = 0; i < n; ++i) {
    const PairCandidate &c = pool[order[i]];
    JudgmentItem item;
    std::string number = std::to_string(i + 1);
    item.item_id = "item-" + std::string(digits - number.size(), '0') + number;
    item.context_text = c.context_text;
    item.reference_option = rng.bernoulli(0.5) ? 'A' : 'B';
    item.option_a = item.reference_option == 'A' ? c.reference_text : c.variant_text;
    item.option_b = item.reference_option == 'A' ? c.variant_text : c.reference_text;
    item.ref_id = c.ref_id;
    item.var_id = c.var_id;
    item.construction = c.construction;
    items.push_back(std::move(item));
  }
  return items;
}

ordered_json public_item_json(const JudgmentItem &item) {
  ordered_json j;
  j["schema"] = kSchemaVersion;
  j["item_id"] = item.item_id;
  j["context_text"] = item.context_text;
  j["option_a_text"] = item.option_a;
  j["option_b_text"] = item.option_b;
  return j;
}

ordered_json item_json(const JudgmentItem &item) {
  ordered_json j = public_item_json(item);
  j["hidden_mapping"] = {{"reference_option", std::string(1, item.reference_option)},
                         {"ref_id", item.ref_id},
                         {"var_id", item.var_id}};
  j["construction"] = to_string(item.construction);
  return j;
}

JudgmentItem item_from_json(const ordered_json &j) {
  try {
    if (j.at("schema").get<int>() != kSchemaVersion) throw FormatError("unsupported item schema");
    JudgmentItem item;
    item.item_id = j.at("item_id").get<std::string>();
    item.context_text = j.at("context_text").get<std::string>();
    item.option_a = j.at("option_a_text").get<std::string>();
    item.option_b = j.at("option_b_text").get<std::string>();
    const auto &hidden = j.at("hidden_mapping");
    const std::string side = hidden.at("reference_option").get<std::string>();
    if (side != "A" && side != "B") throw FormatError("reference_option must be A or B");
    item.reference_option = side[0];
    item.ref_id = hidden.at("ref_id").get<std::string>();
    item.var_id = hidden.at("var_id").get<std::string>();
    item.construction = parse_construction(j.at("construction").get<std::string>());
    return item;
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(std::string("malformed judgment item: ") + e.what());
  }
}

void write_items(std::ostream &out, std::span<const JudgmentItem> items, std::uint64_t seed) {
  ordered_json j;
  j["schema"] = kSchemaVersion;
  j["seed"] = seed;
  j["items"] = ordered_json::array();
  for (const JudgmentItem &item : items) j["items"].push_back(item_json(item));
  out << j.dump(2) << '\n';
}

std::vector<JudgmentItem> read_items(std::istream &in) {
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const nlohmann::json::exception &e) {
    throw FormatError(std::string("judgment items are not valid JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("items") || !j["items"].is_array())
    throw FormatError("judgment item file lacks an 'items' array");
  std::vector<JudgmentItem> items;
  std::set<std::string> ids;
  for (const auto &entry : j["items"]) {
    items.push_back(item_from_json(entry));
    if (!ids.insert(items.back().item_id).second)
      throw FormatError("duplicate item id '" + items.back().item_id + "'");
  }
  return items;
}

ordered_json record_json(const JudgmentRecord &r) {
  ordered_json j;
  j["schema"] = kSchemaVersion;
  j["item_id"] = r.item_id;
  j["rater_id"] = r.rater_id;
  j["chosen_option"] = std::string(1, r.chosen_option);
  j["timestamp"] = r.timestamp;
  if (r.response_ms) j["response_ms"] = *r.response_ms;
  else j["response_ms"] = nullptr;
  return j;
}

std::optional<JudgmentRecord> parse_record(const ordered_json &body, std::vector<FieldError> &errors) {
  errors.clear();
  if (!body.is_object()) {
    errors.push_back({"body", "expected a JSON object"});
    return std::nullopt;
  }
  JudgmentRecord r;
  if (!body.contains("schema") || !body["schema"].is_number_integer() ||
      body["schema"].get<long long>() != kSchemaVersion)
    errors.push_back({"schema", "must be 1"});
  const auto string_field = [&](const char *name, std::string &out, bool required) {
    if (!body.contains(name) || body[name].is_null()) {
      if (required) errors.push_back({name, "is required"});
      return;
    }
    if (!body[name].is_string()) {
      errors.push_back({name, "must be a string"});
      return;
    }
    out = body[name].get<std::string>();
    if (required && internal::trim(out).empty()) errors.push_back({name, "must not be empty"});
  };
  string_field("item_id", r.item_id, true);
  string_field("rater_id", r.rater_id, true);
  string_field("timestamp", r.timestamp, false);
  std::string choice;
  string_field("chosen_option", choice, true);
  if (!choice.empty()) {
    if (choice == "A" || choice == "B") r.chosen_option = choice[0];
    else errors.push_back({"chosen_option", "must be \"A\" or \"B\""});
  }
  if (body.contains("response_ms") && !body["response_ms"].is_null()) {
    if (!body["response_ms"].is_number_integer() || body["response_ms"].get<long long>() < 0)
      errors.push_back({"response_ms", "must be a non-negative integer"});
    else r.response_ms = body["response_ms"].get<long long>();
  }
  if (!errors.empty()) return std::nullopt;
  return r;
}

std::vector<JudgmentRecord> read_judgment_log(std::istream &in) {
  std::vector<JudgmentRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (internal::trim(line).empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::exception &) {
      throw ParseError(line_no, "judgment log line is not valid JSON");
    }
    std::vector<FieldError> errors;
    auto r = parse_record(j, errors);
    if (!r) throw ParseError(line_no, "invalid judgment record: " + errors.front().field + " " +
                                          errors.front().message);
    out.push_back(std::move(*r));
  }
  return out;
}

JudgmentStore::JudgmentStore(std::filesystem::path path) : path_(std::move(path)) {
  if (std::filesystem::exists(path_)) {
    std::ifstream in(path_);
    if (!in) throw FormatError("cannot read judgment log " + path_.string());
    records_ = read_judgment_log(in);
    for (const JudgmentRecord &r : records_) keys_.emplace(r.item_id, r.rater_id);
  }
  out_.open(path_, std::ios::app);
  if (!out_) throw FormatError("cannot open judgment log " + path_.string() + " for appending");
}

JudgmentStore::AppendResult JudgmentStore::append(const JudgmentRecord &record) {
  std::lock_guard lock(mu_);
  if (!keys_.emplace(record.item_id, record.rater_id).second) return AppendResult::kDuplicate;
  out_ << record_json(record).dump() << '\n';
  out_.flush();
  records_.push_back(record);
  return AppendResult::kAccepted;
}

bool JudgmentStore::contains(const std::string &item_id, const std::string &rater_id) const {
  std::lock_guard lock(mu_);
  return keys_.contains({item_id, rater_id});
}

std::set<std::string> JudgmentStore::answered_by(const std::string &rater_id) const {
  std::lock_guard lock(mu_);
  std::set<std::string> out;
  for (const auto &[item, rater] : keys_)
    if (rater == rater_id) out.insert(item);
  return out;
}

std::vector<JudgmentRecord> JudgmentStore::records() const {
  std::lock_guard lock(mu_);
  return records_;
}

std::size_t JudgmentStore::size() const {
  std::lock_guard lock(mu_);
  return records_.size();
}

namespace {

std::optional<double> percent(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

AgreementReport agreement_stats(std::span<const JudgmentRecord> records, std::span<const JudgmentItem> items,
                                const std::map<std::string, bool> &model_picks_reference) {
  std::map<std::string, std::size_t> index;
  AgreementReport report;
  for (const JudgmentItem &item : items) {
    if (!index.emplace(item.item_id, report.labels.size()).second)
      throw UsageError("duplicate item id '" + item.item_id + "'");
    ItemLabel label;
    label.item_id = item.item_id;
    const auto it = model_picks_reference.find(item.item_id);
    if (it == model_picks_reference.end())
      throw PreconditionError("no model prediction for item '" + item.item_id + "'");
    label.model_reference = it->second;
    report.labels.push_back(label);
  }
  std::set<std::pair<std::string, std::string>> seen;
  for (const JudgmentRecord &r : records) {
    const auto it = index.find(r.item_id);
    if (it == index.end()) throw UsageError("judgment for unknown item '" + r.item_id + "'");
    if (!seen.emplace(r.item_id, r.rater_id).second)
      throw UsageError("rater '" + r.rater_id + "' judged item '" + r.item_id + "' twice");
    ItemLabel &label = report.labels[it->second];
    if (r.chosen_option == items[it->second].reference_option) ++label.votes_reference;
    else ++label.votes_variant;
  }
  for (ItemLabel &label : report.labels)
    if (label.votes_reference != label.votes_variant)
      label.majority_reference = label.votes_reference > label.votes_variant;

  const auto row_for = [&](const std::string &group, auto &&member) {
    AgreementRow row;
    row.group = group;
    std::size_t human_ref = 0, model_ref = 0, model_human = 0, pooled_ref = 0, pooled = 0;
    double minority = 0;
    std::size_t judged = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (!member(items[i])) continue;
      const ItemLabel &label = report.labels[i];
      ++row.items;
      if (label.model_reference) ++model_ref;
      const std::size_t votes = label.votes_reference + label.votes_variant;
      if (votes == 0) {
        ++row.unjudged;
        continue;
      }
      ++judged;
      pooled += votes;
      pooled_ref += label.votes_reference;
      minority += static_cast<double>(std::min(label.votes_reference, label.votes_variant)) /
                  static_cast<double>(votes);
      if (!label.majority_reference) {
        ++row.ties;
        continue;
      }
      ++row.decided;
      if (*label.majority_reference) ++human_ref;
      if (*label.majority_reference == label.model_reference) ++model_human;
    }
    row.human_corpus = percent(human_ref, row.decided);
    row.model_corpus = percent(model_ref, row.items);
    row.model_human = percent(model_human, row.decided);
    row.pooled_human_corpus = percent(pooled_ref, pooled);
    if (judged > 0) row.disagreement = minority / static_cast<double>(judged);
    return row;
  };
  report.rows.push_back(row_for("overall", [](const JudgmentItem &) { return true; }));
  for (Subset s : kAllSubsets) {
    if (s == Subset::kOverall) continue;
    report.rows.push_back(row_for(std::string(to_string(s)),
                                  [s](const JudgmentItem &item) { return in_subset(item.construction, s); }));
  }
  return report;
}

void write_agreement_table(std::ostream &out, const AgreementReport &report,
                           std::span<const std::string> header_lines) {
  for (const std::string &h : header_lines) out << "# " << h << '\n';
  const auto pct = [](const std::optional<double> &v) {
    return v ? internal::format_fixed(*v, 2) : std::string("N/A");
  };
  out << "group\titems\tdecided\tties\tunjudged\thuman_vs_corpus\tmodel_vs_corpus\tmodel_vs_human"
         "\tpooled_human_vs_corpus\tdisagreement\n";
  for (const AgreementRow &r : report.rows) {
    out << r.group << '\t' << r.items << '\t' << r.decided << '\t' << r.ties << '\t' << r.unjudged << '\t'
        << pct(r.human_corpus) << '\t' << pct(r.model_corpus) << '\t' << pct(r.model_human) << '\t'
        << pct(r.pooled_human_corpus) << '\t'
        << (r.disagreement ? internal::format_fixed(*r.disagreement, 4) : std::string("N/A")) << '\n';
  }
}

std::string agreement_to_json(const AgreementReport &report) {
  const auto opt = [](const std::optional<double> &v) { return v ? ordered_json(*v) : ordered_json(nullptr); };
  ordered_json j;
  j["schema"] = kSchemaVersion;
  j["kind"] = "agreement";
  j["rows"] = ordered_json::array();
  for (const AgreementRow &r : report.rows) {
    j["rows"].push_back({{"group", r.group},
                         {"items", r.items},
                         {"decided", r.decided},
                         {"ties", r.ties},
                         {"unjudged", r.unjudged},
                         {"human_vs_corpus", opt(r.human_corpus)},
                         {"model_vs_corpus", opt(r.model_corpus)},
                         {"model_vs_human", opt(r.model_human)},
                         {"pooled_human_vs_corpus", opt(r.pooled_human_corpus)},
                         {"disagreement", opt(r.disagreement)}});
  }
  return j.dump(2) + "\n";
}

}  // namespace wordorder
