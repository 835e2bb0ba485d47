// Pairwise ranking instances: each reference is paired with each of its
// variants, members alternating between REF-VAR (label 1) and VAR-REF
// (label 0) order. The instance delta is first member minus second member.

#ifndef WORDORDER_PAIRRANK_H_
#define WORDORDER_PAIRRANK_H_

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "wordorder/features.h"
#include "wordorder/variants.h"

namespace wordorder {

enum class Predictor {
  kDependencyLength,
  kInformationStatus,
  kPcfgSurprisal,
  kTrigramSurprisal,
  kAdaptiveLstmSurprisal,
};

inline constexpr Predictor kAllPredictors[] = {
    Predictor::kDependencyLength, Predictor::kInformationStatus, Predictor::kPcfgSurprisal,
    Predictor::kTrigramSurprisal, Predictor::kAdaptiveLstmSurprisal};

// Short names: deplen, is, pcfg, trigram, lstm.
std::string_view to_string(Predictor p);
std::string_view display_name(Predictor p);
Predictor parse_predictor(std::string_view name);
// Comma-separated list; throws UsageError on unknown or repeated names.
std::vector<Predictor> parse_predictor_list(std::string_view names);
std::string format_predictor_list(std::span<const Predictor> predictors);

std::optional<double> predictor_value(const FeatureVector &f, Predictor p);

struct Construction {
  OrderType reference = OrderType::kOther;
  OrderType variant = OrderType::kOther;

  bool operator==(const Construction &) const = default;
};
std::string to_string(const Construction &c);  // e.g. "OSV_DO_FRONTED>SOV"
Construction parse_construction(std::string_view s);

// Analysis subsets. OSV = DOSV + IOSV; DOSV, IOSV, canonical and other
// partition the instances.
enum class Subset { kOverall, kOsv, kDosv, kIosv, kCanonical, kOther };
inline constexpr Subset kAllSubsets[] = {Subset::kOverall, Subset::kOsv,       Subset::kDosv,
                                         Subset::kIosv,    Subset::kCanonical, Subset::kOther};
std::string_view to_string(Subset s);
Subset parse_subset(std::string_view s);
bool in_subset(const Construction &c, Subset s);

struct PairInstance {
  std::string ref_id;
  std::string var_id;
  std::vector<double> delta;
  int label = 1;  // 1 = REF-VAR order, 0 = VAR-REF order
  Construction construction;

  bool operator==(const PairInstance &) const = default;
};

// The same pair with its members swapped: delta negated and label flipped.
PairInstance mirror(const PairInstance &instance);

struct VariantFeatures {
  std::string var_id;
  OrderType order_type = OrderType::kOther;
  FeatureVector features;
};

struct ReferenceGroup {
  std::string ref_id;
  OrderType order_type = OrderType::kOther;
  FeatureVector features;
  std::vector<VariantFeatures> variants;
};

// Groups a feature table into references with their variants, in order of
// first appearance of each reference.
std::vector<ReferenceGroup> group_feature_rows(std::span<const FeatureRow> rows);

struct PairwiseResult {
  std::vector<Predictor> predictors;
  std::vector<PairInstance> instances;
  std::size_t skipped_references = 0;  // no variant with complete features
  std::size_t dropped_incomplete = 0;  // variants dropped for absent features
  std::vector<std::string> warnings;
};

// Variants are taken in order of their `.v<k>` number; the first surviving
// variant of each reference is emitted REF-VAR.
PairwiseResult pairwise_transform(std::span<const ReferenceGroup> groups,
                                  std::span<const Predictor> predictors);

struct ColumnStats {
  double mean = 0.0;
  double sd = 0.0;  // 0 marks a constant column

  bool operator==(const ColumnStats &) const = default;
};

struct Normalization {
  std::vector<ColumnStats> columns;
  std::vector<std::string> warnings;
};

struct NormalizedInstances {
  std::vector<PairInstance> instances;
  Normalization stats;
};

// Z-scores every delta column with its sample mean and standard deviation.
// Constant columns become zeros (with a warning). Throws StatisticsError for
// fewer than two instances.
NormalizedInstances zscore_normalize(std::span<const PairInstance> instances);
std::vector<PairInstance> apply_normalization(std::span<const PairInstance> instances,
                                              const Normalization &stats);

// Instance dump: ref_id var_id label construction <one column per predictor>.
void write_pair_table(std::ostream &out, std::span<const PairInstance> instances,
                      std::span<const Predictor> predictors,
                      std::span<const std::string> header_lines = {});
struct PairTable {
  std::vector<Predictor> predictors;
  std::vector<PairInstance> instances;
};
PairTable read_pair_table(std::istream &in);

void write_stats_table(std::ostream &out, const Normalization &stats,
                       std::span<const Predictor> predictors,
                       std::span<const std::string> header_lines = {});

}  // namespace wordorder

#endif  // WORDORDER_PAIRRANK_H_
