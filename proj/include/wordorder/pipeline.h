// End-to-end experiment: ingest, eligibility, variants, features, pairwise
// transform, regression, cross-validation and the ablation table.

#ifndef WORDORDER_PIPELINE_H_
#define WORDORDER_PIPELINE_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wordorder/judgments.h"
#include "wordorder/pairrank.h"
#include "wordorder/stats.h"
#include "wordorder/treebank.h"
#include "wordorder/variants.h"

namespace wordorder {

inline constexpr std::string_view kArtifactVersion = "wordorder 0.1.0";

struct ExperimentConfig {
  std::vector<std::filesystem::path> treebanks;
  std::optional<std::filesystem::path> relation_map;  // built-in defaults otherwise
  std::optional<std::filesystem::path> lm_corpus;
  std::optional<std::filesystem::path> lm_model;
  long long lm_min_count = 2;
  std::optional<std::filesystem::path> pcfg_sidecar;
  std::optional<std::filesystem::path> lstm_sidecar;
  std::size_t variant_cap = kDefaultVariantCap;
  std::uint64_t variant_seed = 1;
  bool filter_variants = true;
  std::vector<Predictor> predictors{Predictor::kDependencyLength, Predictor::kInformationStatus,
                                    Predictor::kTrigramSurprisal};
  std::size_t folds = 10;
  std::uint64_t cv_seed = 1;
  std::size_t judgment_items = 0;  // 0 skips the export
  std::uint64_t judgment_seed = 1;
  std::filesystem::path output_dir = "out";
};

// Throws StageError("config", ...) naming the offending field or input.
void validate_config(const ExperimentConfig &config);

// Canonical key=value rendering, excluding the output directory.
std::string canonical_config(const ExperimentConfig &config);
std::string config_hash(const ExperimentConfig &config);  // 16 hex digits
// Lines stamped at the top of every output file.
std::vector<std::string> output_header(const ExperimentConfig &config);

struct DistributionRow {
  OrderType order_type = OrderType::kOther;
  std::size_t references = 0;
  std::size_t variants = 0;
};

struct DistributionTable {
  std::vector<DistributionRow> rows;  // SOV, OSV_DO_FRONTED, OSV_IO_FRONTED, OTHER
  std::size_t total_references = 0;
  std::size_t total_variants = 0;
};

DistributionTable order_distribution(std::span<const OrderedSentence> sentences);
void write_distribution_table(std::ostream &out, const DistributionTable &table,
                              std::span<const std::string> header_lines = {});

struct AblationRow {
  std::string model;  // predictor short names joined with '+'
  std::vector<Predictor> predictors;
  CvReport cv;
  std::optional<std::string> compared_to;
  std::optional<McNemarResult> mcnemar;
};

// Single-predictor rows, then cumulative models in the given predictor order;
// each cumulative row is compared with McNemar's test against the row above.
std::vector<AblationRow> ablation_table(std::span<const PairInstance> instances,
                                        std::span<const Predictor> available,
                                        std::span<const Predictor> order, const CvOptions &options);
void write_ablation_table(std::ostream &out, std::span<const AblationRow> rows,
                          std::span<const std::string> header_lines = {});

struct LrTestRow {
  Predictor dropped = Predictor::kDependencyLength;
  LikelihoodRatioTest test;
};

struct PipelineResult {
  std::size_t sentences = 0;
  std::size_t eligible = 0;
  std::map<std::string, std::size_t> ineligible_reasons;
  std::size_t variants_generated = 0;
  std::size_t variants_filtered = 0;
  DistributionTable distribution;
  std::vector<PairInstance> instances;  // raw deltas
  std::vector<Predictor> predictors;
  std::size_t skipped_references = 0;
  RegressionFit fit;
  std::vector<LrTestRow> lr_tests;
  CvReport cv;
  std::vector<AblationRow> ablation;
  std::vector<JudgmentItem> judgment_items;
  std::vector<std::filesystem::path> outputs;
  std::string config_hash;
};

// Runs every stage and writes the reports to config.output_dir. Any failure
// is rethrown as StageError naming the stage (and sentence, when known).
PipelineResult run_pipeline(const ExperimentConfig &config);

// Display candidates for every instance, with the preceding sentence as
// context.
std::vector<PairCandidate> judgment_pool(std::span<const PairInstance> instances,
                                         const std::map<std::string, const OrderedSentence *> &sentences,
                                         const std::map<std::string, std::string> &contexts);

// item_id -> model picks the reference, from per-pair CV correctness.
std::map<std::string, bool> model_choices(std::span<const JudgmentItem> items,
                                          std::span<const PairInstance> instances, const CvReport &cv);
using PairCorrectness = std::map<std::pair<std::string, std::string>, bool>;
std::map<std::string, bool> model_choices(std::span<const JudgmentItem> items, const PairCorrectness &correct);
// Reads (ref_id, var_id) -> correct from a CV prediction table.
PairCorrectness read_cv_predictions(std::istream &in);

}  // namespace wordorder

#endif  // WORDORDER_PIPELINE_H_
