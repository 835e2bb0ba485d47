// Two-alternative forced-choice items, the append-only judgment log, and
// agreement statistics between raters, corpus labels and the model.

#ifndef WORDORDER_JUDGMENTS_H_
#define WORDORDER_JUDGMENTS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "wordorder/pairrank.h"

namespace wordorder {

inline constexpr int kSchemaVersion = 1;

// A reference-variant pair ready for display.
struct PairCandidate {
  std::string ref_id;
  std::string var_id;
  std::string context_text;
  std::string reference_text;
  std::string variant_text;
  Construction construction;
};

struct JudgmentItem {
  std::string item_id;
  std::string context_text;
  std::string option_a;
  std::string option_b;
  char reference_option = 'A';  // hidden from raters
  std::string ref_id;           // hidden
  std::string var_id;           // hidden
  Construction construction;    // hidden

  bool operator==(const JudgmentItem &) const = default;
};

// Samples `n` pairs uniformly without replacement and randomizes which side
// shows the reference. Throws UsageError when n exceeds the pool.
std::vector<JudgmentItem> export_judgment_items(std::span<const PairCandidate> pool, std::size_t n,
                                                std::uint64_t seed);

// What a rater's client receives: no field reveals the hidden mapping.
nlohmann::ordered_json public_item_json(const JudgmentItem &item);
// Full record including the hidden mapping, for the server-side item file.
nlohmann::ordered_json item_json(const JudgmentItem &item);
JudgmentItem item_from_json(const nlohmann::ordered_json &j);

void write_items(std::ostream &out, std::span<const JudgmentItem> items, std::uint64_t seed);
std::vector<JudgmentItem> read_items(std::istream &in);

struct JudgmentRecord {
  std::string item_id;
  std::string rater_id;
  char chosen_option = 'A';
  std::string timestamp;
  std::optional<long long> response_ms;

  bool operator==(const JudgmentRecord &) const = default;
};

nlohmann::ordered_json record_json(const JudgmentRecord &r);

struct FieldError {
  std::string field;
  std::string message;
};

// Validates a submitted judgment body. On failure `errors` is non-empty.
std::optional<JudgmentRecord> parse_record(const nlohmann::ordered_json &body,
                                           std::vector<FieldError> &errors);

std::vector<JudgmentRecord> read_judgment_log(std::istream &in);

// Line-delimited JSON log; records are only ever appended. Safe for
// concurrent use.
class JudgmentStore {
 public:
  // Opens (creating if needed) the log at `path` and loads existing records.
  explicit JudgmentStore(std::filesystem::path path);

  enum class AppendResult { kAccepted, kDuplicate };
  AppendResult append(const JudgmentRecord &record);

  bool contains(const std::string &item_id, const std::string &rater_id) const;
  std::set<std::string> answered_by(const std::string &rater_id) const;
  std::vector<JudgmentRecord> records() const;
  std::size_t size() const;

 private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::ofstream out_;
  std::vector<JudgmentRecord> records_;
  std::set<std::pair<std::string, std::string>> keys_;
};

struct AgreementRow {
  std::string group;  // "overall" or a subset name
  std::size_t items = 0;
  std::size_t decided = 0;
  std::size_t ties = 0;
  std::size_t unjudged = 0;
  std::optional<double> human_corpus;   // % decided items whose majority picks the reference
  std::optional<double> model_corpus;   // % items where the model picks the reference
  std::optional<double> model_human;    // % decided items where model and majority agree
  std::optional<double> pooled_human_corpus;  // % of all judgments picking the reference
  std::optional<double> disagreement;   // mean minority share among judged items
};

struct ItemLabel {
  std::string item_id;
  std::size_t votes_reference = 0;
  std::size_t votes_variant = 0;
  std::optional<bool> majority_reference;  // absent on ties or no votes
  bool model_reference = false;
};

struct AgreementReport {
  std::vector<AgreementRow> rows;
  std::vector<ItemLabel> labels;  // in item order
};

// `model_picks_reference` maps item_id to whether the model ranks the
// reference above the variant. Throws UsageError for records naming unknown
// items or repeating an (item, rater) pair.
AgreementReport agreement_stats(std::span<const JudgmentRecord> records,
                                std::span<const JudgmentItem> items,
                                const std::map<std::string, bool> &model_picks_reference);

void write_agreement_table(std::ostream &out, const AgreementReport &report,
                           std::span<const std::string> header_lines = {});
std::string agreement_to_json(const AgreementReport &report);

}  // namespace wordorder

#endif  // WORDORDER_JUDGMENTS_H_
