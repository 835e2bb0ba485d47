#include "wordorder/pipeline.h"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <variant>

#include "json.hpp"
#include "text_util.h"
#include "wordorder/errors.h"
#include "wordorder/features.h"
#include "wordorder/ngram.h"
#include "wordorder/random.h"
#include "wordorder/relation_map.h"

namespace wordorder {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

[[noreturn]] void config_error(const std::string &what) { throw StageError("config", what); }

void require_file(const fs::path &path, const std::string &field) {
  if (!fs::is_regular_file(path)) config_error(field + ": input '" + path.string() + "' does not exist");
}

std::string seeds_line(const ExperimentConfig &c) {
  return "seeds: variant_seed=" + std::to_string(c.variant_seed) + " cv_seed=" + std::to_string(c.cv_seed) +
         " judgment_seed=" + std::to_string(c.judgment_seed);
}

}  // namespace

void validate_config(const ExperimentConfig &config) {
  if (config.treebanks.empty()) config_error("treebank: at least one treebank is required");
  for (const fs::path &p : config.treebanks) require_file(p, "treebank");
  if (config.relation_map) require_file(*config.relation_map, "relations");
  if (config.lm_corpus && config.lm_model) config_error("give either lm_corpus or lm_model, not both");
  if (!config.lm_corpus && !config.lm_model) config_error("lm_corpus or lm_model is required");
  if (config.lm_corpus) require_file(*config.lm_corpus, "lm_corpus");
  if (config.lm_model) require_file(*config.lm_model, "lm_model");
  if (config.lm_min_count < 1) config_error("lm_min_count must be at least 1");
  if (config.pcfg_sidecar) require_file(*config.pcfg_sidecar, "pcfg_sidecar");
  if (config.lstm_sidecar) require_file(*config.lstm_sidecar, "lstm_sidecar");
  if (config.variant_cap < 1) config_error("variant_cap must be at least 1");
  if (config.folds < 2) config_error("folds must be at least 2");
  if (config.predictors.empty()) config_error("predictors: at least one predictor is required");
  std::set<Predictor> unique(config.predictors.begin(), config.predictors.end());
  if (unique.size() != config.predictors.size()) config_error("predictors: repeated predictor");
  if (unique.contains(Predictor::kPcfgSurprisal) && !config.pcfg_sidecar)
    config_error("predictor 'pcfg' requested but no pcfg_sidecar input was given");
  if (unique.contains(Predictor::kAdaptiveLstmSurprisal) && !config.lstm_sidecar)
    config_error("predictor 'lstm' requested but no lstm_sidecar input was given");
}

std::string canonical_config(const ExperimentConfig &c) {
  std::ostringstream out;
  const auto opt = [](const std::optional<fs::path> &p) { return p ? p->generic_string() : std::string(); };
  std::vector<std::string> treebanks;
  for (const fs::path &p : c.treebanks) treebanks.push_back(p.generic_string());
  out << "treebanks=" << internal::join(treebanks, ",") << '\n'
      << "relations=" << opt(c.relation_map) << '\n'
      << "lm_corpus=" << opt(c.lm_corpus) << '\n'
      << "lm_model=" << opt(c.lm_model) << '\n'
      << "lm_min_count=" << c.lm_min_count << '\n'
      << "pcfg_sidecar=" << opt(c.pcfg_sidecar) << '\n'
      << "lstm_sidecar=" << opt(c.lstm_sidecar) << '\n'
      << "variant_cap=" << c.variant_cap << '\n'
      << "variant_seed=" << c.variant_seed << '\n'
      << "filter_variants=" << (c.filter_variants ? 1 : 0) << '\n'
      << "predictors=" << format_predictor_list(c.predictors) << '\n'
      << "folds=" << c.folds << '\n'
      << "cv_seed=" << c.cv_seed << '\n'
      << "judgment_items=" << c.judgment_items << '\n'
      << "judgment_seed=" << c.judgment_seed << '\n';
  return out.str();
}

std::string config_hash(const ExperimentConfig &config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical_config(config))));
  return buf;
}

std::vector<std::string> output_header(const ExperimentConfig &config) {
  return {"artifact: " + std::string(kArtifactVersion), "config_hash: " + config_hash(config),
          seeds_line(config)};
}

DistributionTable order_distribution(std::span<const OrderedSentence> sentences) {
  DistributionTable table;
  for (OrderType t : {OrderType::kSov, OrderType::kOsvDoFronted, OrderType::kOsvIoFronted, OrderType::kOther})
    table.rows.push_back({t, 0, 0});
  for (const OrderedSentence &s : sentences) {
    DistributionRow &row = table.rows[static_cast<std::size_t>(s.order_type)];
    if (s.origin == Origin::kReference) {
      ++row.references;
      ++table.total_references;
    } else {
      ++row.variants;
      ++table.total_variants;
    }
  }
  return table;
}

void write_distribution_table(std::ostream &out, const DistributionTable &table,
                              std::span<const std::string> header_lines) {
  for (const std::string &h : header_lines) out << "# " << h << '\n';
  const auto pct = [](std::size_t n, std::size_t total) {
    return total == 0 ? std::string("N/A")
                      : internal::format_fixed(100.0 * static_cast<double>(n) / static_cast<double>(total), 2);
  };
  out << "order_type\treferences\treferences_pct\tvariants\tvariants_pct\n";
  for (const DistributionRow &r : table.rows)
    out << to_string(r.order_type) << '\t' << r.references << '\t' << pct(r.references, table.total_references)
        << '\t' << r.variants << '\t' << pct(r.variants, table.total_variants) << '\n';
  out << "total\t" << table.total_references << '\t' << pct(table.total_references, table.total_references)
      << '\t' << table.total_variants << '\t' << pct(table.total_variants, table.total_variants) << '\n';
}

std::vector<AblationRow> ablation_table(std::span<const PairInstance> instances,
                                        std::span<const Predictor> available,
                                        std::span<const Predictor> order, const CvOptions &options) {
  std::vector<AblationRow> rows;
  const auto run = [&](std::vector<Predictor> predictors) {
    AblationRow row;
    row.model = format_predictor_list(predictors);
    std::replace(row.model.begin(), row.model.end(), ',', '+');
    row.cv = kfold_cv(instances, select_predictors(available, predictors), options);
    row.predictors = std::move(predictors);
    return row;
  };
  for (Predictor p : order) rows.push_back(run({p}));
  std::vector<Predictor> cumulative{order.front()};
  std::size_t previous = 0;
  for (std::size_t i = 1; i < order.size(); ++i) {
    cumulative.push_back(order[i]);
    AblationRow row = run(cumulative);
    const AblationRow &base = rows[previous];
    row.compared_to = base.model;
    row.mcnemar = mcnemar_test(row.cv.correct, base.cv.correct);
    rows.push_back(std::move(row));
    previous = rows.size() - 1;
  }
  return rows;
}

void write_ablation_table(std::ostream &out, std::span<const AblationRow> rows,
                          std::span<const std::string> header_lines) {
  for (const std::string &h : header_lines) out << "# " << h << '\n';
  out << "model";
  for (Subset s : kAllSubsets) out << '\t' << to_string(s);
  out << "\tcompared_to\tmcnemar_b\tmcnemar_c\tmcnemar_p\n";
  for (const AblationRow &r : rows) {
    out << r.model;
    for (const SubsetAccuracy &a : r.cv.subsets)
      out << '\t' << (a.percent ? internal::format_fixed(*a.percent, 2) : std::string("N/A"));
    if (r.mcnemar)
      out << '\t' << *r.compared_to << '\t' << r.mcnemar->b << '\t' << r.mcnemar->c << '\t'
          << internal::format_fixed(r.mcnemar->p_value, 4) << '\n';
    else
      out << "\t-\t-\t-\t-\n";
  }
}

std::vector<PairCandidate> judgment_pool(std::span<const PairInstance> instances,
                                         const std::map<std::string, const OrderedSentence *> &sentences,
                                         const std::map<std::string, std::string> &contexts) {
  std::vector<PairCandidate> pool;
  for (const PairInstance &inst : instances) {
    const auto ref = sentences.find(inst.ref_id);
    const auto var = sentences.find(inst.var_id);
    if (ref == sentences.end() || var == sentences.end())
      throw UsageError("no sentence text for pair " + inst.ref_id + " / " + inst.var_id);
    PairCandidate c;
    c.ref_id = inst.ref_id;
    c.var_id = inst.var_id;
    const auto ctx = contexts.find(inst.ref_id);
    if (ctx != contexts.end()) c.context_text = ctx->second;
    c.reference_text = ref->second->tree.text();
    c.variant_text = var->second->tree.text();
    c.construction = inst.construction;
    pool.push_back(std::move(c));
  }
  return pool;
}

std::map<std::string, bool> model_choices(std::span<const JudgmentItem> items, const PairCorrectness &correct) {
  std::map<std::string, bool> out;
  for (const JudgmentItem &item : items) {
    const auto it = correct.find({item.ref_id, item.var_id});
    if (it == correct.end())
      throw PreconditionError("no model prediction for pair " + item.ref_id + " / " + item.var_id);
    // A correct pairwise prediction ranks the reference first.
    out[item.item_id] = it->second;
  }
  return out;
}

std::map<std::string, bool> model_choices(std::span<const JudgmentItem> items,
                                          std::span<const PairInstance> instances, const CvReport &cv) {
  if (instances.size() != cv.correct.size()) throw UsageError("CV report does not match instances");
  PairCorrectness correct;
  for (std::size_t i = 0; i < instances.size(); ++i)
    correct[{instances[i].ref_id, instances[i].var_id}] = cv.correct[i];
  return model_choices(items, correct);
}

PairCorrectness read_cv_predictions(std::istream &in) {
  PairCorrectness out;
  std::string raw;
  std::size_t line_no = 0;
  std::optional<std::size_t> ref_col, var_col, correct_col;
  while (std::getline(in, raw)) {
    ++line_no;
    if (raw.empty() || raw.front() == '#') continue;
    const auto fields = internal::split(raw, '\t');
    if (!ref_col) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (fields[i] == "ref_id") ref_col = i;
        if (fields[i] == "var_id") var_col = i;
        if (fields[i] == "correct") correct_col = i;
      }
      if (!ref_col || !var_col || !correct_col) throw ParseError(line_no, "missing CV prediction header");
      continue;
    }
    const std::size_t need = std::max({*ref_col, *var_col, *correct_col});
    if (fields.size() <= need) throw ParseError(line_no, "short CV prediction row");
    out[{std::string(fields[*ref_col]), std::string(fields[*var_col])}] = fields[*correct_col] == "1";
  }
  if (!ref_col) throw FormatError("empty CV prediction table");
  return out;
}

namespace {

struct Writer {
  const fs::path &dir;
  std::vector<std::string> header;
  std::vector<fs::path> &written;

  template <typename Fn>
  void text(const std::string &name, Fn &&fn) {
    const fs::path path = dir / name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw StageError("report", "cannot write " + path.string());
    fn(out, std::span<const std::string>(header));
    if (!out) throw StageError("report", "write failed for " + path.string());
    written.push_back(path);
  }

  void json(const std::string &name, const std::string &body) {
    ordered_json stamped;
    stamped["artifact"] = header;
    const ordered_json parsed = ordered_json::parse(body);
    for (auto it = parsed.begin(); it != parsed.end(); ++it) stamped[it.key()] = it.value();
    text(name, [&](std::ostream &out, std::span<const std::string>) { out << stamped.dump(2) << '\n'; });
  }
};

template <typename Fn>
auto stage(const char *name, Fn &&fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError &) {
    throw;
  } catch (const std::exception &e) {
    throw StageError(name, e.what());
  }
}

}  // namespace

PipelineResult run_pipeline(const ExperimentConfig &config) {
  validate_config(config);
  PipelineResult result;
  result.config_hash = config_hash(config);
  result.predictors = config.predictors;

  const RelationMap relations = stage("config", [&] {
    return config.relation_map ? RelationMap::load(config.relation_map->string()) : RelationMap{};
  });

  // Ingest. Contexts are resolved within each treebank file.
  std::vector<DepTree> trees;
  std::map<std::string, std::string> context_text;
  std::map<std::string, std::vector<Token>> context_tokens;
  stage("ingest", [&] {
    std::set<std::string> ids;
    for (const fs::path &path : config.treebanks) {
      std::vector<DepTree> part;
      try {
        part = load_treebank(path.string());
      } catch (const Error &e) {
        throw StageError("ingest", path.string() + ": " + e.what());
      }
      const auto previous = preceding_sentences(part);
      for (std::size_t i = 0; i < part.size(); ++i) {
        const std::string &id = part[i].sentence_id();
        if (!ids.insert(id).second) throw StageError("ingest", id + ": duplicate sentence id");
        if (previous[i]) {
          context_text[id] = previous[i]->text();
          context_tokens[id] = previous[i]->tokens();
        }
      }
      for (DepTree &t : part) trees.push_back(std::move(t));
    }
  });
  result.sentences = trees.size();

  // Eligibility.
  std::vector<const DepTree *> eligible;
  std::vector<std::pair<std::string, EligibilityReport>> eligibility;
  stage("eligibility", [&] {
    for (const DepTree &t : trees) {
      EligibilityReport r;
      try {
        r = check_eligibility(t, relations);
      } catch (const Error &e) {
        throw StageError("eligibility", t.sentence_id() + ": " + e.what());
      }
      if (r.eligible) eligible.push_back(&t);
      for (EligibilityFailure f : r.reasons) ++result.ineligible_reasons[std::string(to_string(f))];
      eligibility.emplace_back(t.sentence_id(), std::move(r));
    }
  });
  result.eligible = eligible.size();
  if (eligible.empty()) throw StageError("eligibility", "no eligible sentences");

  // Variants.
  std::vector<OrderedSentence> sentences;
  stage("variants", [&] {
    std::vector<DepTree> eligible_trees;
    for (const DepTree *t : eligible) eligible_trees.push_back(*t);
    const OrderRuleSet rules = learn_order_rules(eligible_trees, relations);
    for (const DepTree *t : eligible) {
      try {
        sentences.push_back(make_reference(*t, relations));
        std::vector<OrderedSentence> variants =
            generate_variants(*t, relations, config.variant_cap, derive_seed(config.variant_seed, t->sentence_id()));
        result.variants_generated += variants.size();
        if (config.filter_variants) variants = filter_grammatical(variants, rules);
        result.variants_filtered += variants.size();
        for (OrderedSentence &v : variants) sentences.push_back(std::move(v));
      } catch (const StageError &) {
        throw;
      } catch (const Error &e) {
        throw StageError("variants", t->sentence_id() + ": " + e.what());
      }
    }
  });
  result.distribution = order_distribution(sentences);

  // Language model and sidecars.
  const TrigramModel model = stage("lm", [&] {
    if (config.lm_model) return TrigramModel::load_file(config.lm_model->string());
    std::ifstream in(*config.lm_corpus);
    if (!in) throw StageError("lm", "cannot read " + config.lm_corpus->string());
    TrigramOptions options;
    options.min_count = config.lm_min_count;
    return TrigramModel::train(read_corpus(in), options);
  });
  const auto load_sidecar = [&](const std::optional<fs::path> &path, const char *name) {
    return stage(name, [&]() -> std::optional<SurprisalTotals> {
      if (!path) return std::nullopt;
      std::ifstream in(*path);
      if (!in) throw StageError(name, "cannot read " + path->string());
      return load_external_surprisal(in, sentences);
    });
  };
  const auto pcfg = load_sidecar(config.pcfg_sidecar, "pcfg_sidecar");
  const auto lstm = load_sidecar(config.lstm_sidecar, "lstm_sidecar");
  const SurprisalSources sources{pcfg ? &*pcfg : nullptr, lstm ? &*lstm : nullptr};

  // Features.
  std::vector<FeatureRow> rows;
  stage("features", [&] {
    for (const OrderedSentence &s : sentences) {
      DiscoursePair pair;
      const auto ctx = context_tokens.find(s.reference_id);
      if (ctx != context_tokens.end()) pair.context = ctx->second;
      pair.target = s;
      FeatureRow row;
      row.sentence_id = s.id();
      row.reference_id = s.reference_id;
      row.origin = s.origin;
      row.order_type = s.order_type;
      try {
        row.features = featurize(pair, model, relations, sources);
      } catch (const Error &e) {
        throw StageError("features", s.id() + ": " + e.what());
      }
      for (Predictor p : config.predictors)
        if (!predictor_value(row.features, p))
          throw StageError("features", s.id() + ": no " + std::string(to_string(p)) + " surprisal in sidecar");
      rows.push_back(std::move(row));
    }
  });

  // Pairwise transform.
  stage("transform", [&] {
    const PairwiseResult pairs = pairwise_transform(group_feature_rows(rows), config.predictors);
    result.instances = pairs.instances;
    result.skipped_references = pairs.skipped_references;
  });
  if (result.instances.size() < 2) throw StageError("transform", "fewer than two pairwise instances");
  const NormalizedInstances normalized = stage("transform", [&] { return zscore_normalize(result.instances); });
  const PredictorSelection selection = all_predictors(config.predictors);

  // Regression on the whole dataset and per construction.
  result.fit = stage("fit", [&] { return fit_logistic(normalized.instances, selection); });
  std::vector<std::pair<Subset, std::variant<RegressionFit, std::string>>> subset_fits;
  for (Subset s : {Subset::kOsv, Subset::kDosv, Subset::kIosv, Subset::kCanonical}) {
    std::vector<PairInstance> subset;
    for (const PairInstance &inst : result.instances)
      if (in_subset(inst.construction, s)) subset.push_back(inst);
    try {
      if (subset.size() <= selection.columns.size() + 1) throw StatisticsError("too few instances");
      subset_fits.emplace_back(s, fit_logistic(zscore_normalize(subset).instances, selection));
    } catch (const Error &e) {
      subset_fits.emplace_back(s, std::string(e.what()));
    }
  }
  if (config.predictors.size() >= 2) {
    stage("fit", [&] {
      for (std::size_t j = 0; j < config.predictors.size(); ++j) {
        std::vector<Predictor> reduced;
        for (std::size_t i = 0; i < config.predictors.size(); ++i)
          if (i != j) reduced.push_back(config.predictors[i]);
        const RegressionFit small =
            fit_logistic(normalized.instances, select_predictors(config.predictors, reduced));
        result.lr_tests.push_back({config.predictors[j], likelihood_ratio_test(result.fit, small)});
      }
    });
  }

  // Cross-validation and ablation.
  CvOptions cv_options;
  cv_options.k = config.folds;
  cv_options.seed = config.cv_seed;
  result.cv = stage("cv", [&] { return kfold_cv(result.instances, selection, cv_options); });
  result.ablation = stage("cv", [&] {
    return ablation_table(result.instances, config.predictors, config.predictors, cv_options);
  });

  // Judgment items.
  std::map<std::string, const OrderedSentence *> by_id;
  for (const OrderedSentence &s : sentences) by_id[s.id()] = &s;
  if (config.judgment_items > 0) {
    result.judgment_items = stage("export-judgments", [&] {
      const auto pool = judgment_pool(result.instances, by_id, context_text);
      return export_judgment_items(pool, config.judgment_items, config.judgment_seed);
    });
  }

  // Reports.
  fs::create_directories(config.output_dir);
  Writer w{config.output_dir, output_header(config), result.outputs};
  stage("report", [&] {
    w.text("eligibility.tsv", [&](std::ostream &out, std::span<const std::string> header) {
      for (const std::string &h : header) out << "# " << h << '\n';
      out << "sentence_id\teligible\treasons\n";
      for (const auto &[id, r] : eligibility) {
        std::vector<std::string_view> reasons;
        for (EligibilityFailure f : r.reasons) reasons.push_back(to_string(f));
        out << id << '\t' << (r.eligible ? 1 : 0) << '\t' << (reasons.empty() ? "-" : internal::join(reasons, ","))
            << '\n';
      }
    });
    w.text("distribution.tsv", [&](std::ostream &out, std::span<const std::string> header) {
      write_distribution_table(out, result.distribution, header);
    });
    w.text("variants.conllu", [&](std::ostream &out, std::span<const std::string> header) {
      for (const std::string &h : header) out << "# " << h << '\n';
      out << '\n';
      for (const OrderedSentence &s : sentences) write_ordered_sentence(out, s);
    });
    w.text("features.tsv", [&](std::ostream &out, std::span<const std::string> header) {
      write_feature_table(out, rows, header);
    });
    w.text("pairs.tsv", [&](std::ostream &out, std::span<const std::string> header) {
      write_pair_table(out, result.instances, config.predictors, header);
    });
    w.text("pair_stats.tsv", [&](std::ostream &out, std::span<const std::string> header) {
      write_stats_table(out, normalized.stats, config.predictors, header);
    });
    w.text("fit.txt", [&](std::ostream &out, std::span<const std::string> header) {
      write_fit_table(out, result.fit, header);
    });
    w.json("fit.json", fit_to_json(result.fit));
    w.text("fit_by_construction.txt", [&](std::ostream &out, std::span<const std::string> header) {
      for (const std::string &h : header) out << "# " << h << '\n';
      for (const auto &[subset, fit] : subset_fits) {
        out << "\n== " << to_string(subset) << " ==\n";
        if (const auto *f = std::get_if<RegressionFit>(&fit)) write_fit_table(out, *f);
        else out << "not fitted: " << std::get<std::string>(fit) << '\n';
      }
    });
    w.text("lr_tests.tsv", [&](std::ostream &out, std::span<const std::string> header) {
      for (const std::string &h : header) out << "# " << h << '\n';
      out << "dropped\tchi_square\tdf\tp_value\n";
      for (const LrTestRow &r : result.lr_tests)
        out << to_string(r.dropped) << '\t' << internal::format_fixed(r.test.chi_square, 4) << '\t' << r.test.df
            << '\t' << internal::format_double(r.test.p_value) << '\n';
    });
    w.text("cv_predictions.tsv", [&](std::ostream &out, std::span<const std::string> header) {
      write_cv_predictions(out, result.cv, result.instances, header);
    });
    w.json("cv.json", cv_to_json(result.cv, result.instances));
    w.text("ablation.tsv", [&](std::ostream &out, std::span<const std::string> header) {
      write_ablation_table(out, result.ablation, header);
    });
    if (!result.judgment_items.empty()) {
      w.text("judgment_items.json", [&](std::ostream &out, std::span<const std::string>) {
        std::ostringstream body;
        write_items(body, result.judgment_items, config.judgment_seed);
        ordered_json stamped;
        stamped["artifact"] = output_header(config);
        const ordered_json parsed = ordered_json::parse(body.str());
        for (auto it = parsed.begin(); it != parsed.end(); ++it) stamped[it.key()] = it.value();
        out << stamped.dump(2) << '\n';
      });
    }
    ordered_json summary;
    summary["schema"] = kSchemaVersion;
    summary["sentences"] = result.sentences;
    summary["eligible"] = result.eligible;
    summary["ineligible_reasons"] = result.ineligible_reasons;
    summary["variants_generated"] = result.variants_generated;
    summary["variants_kept"] = result.variants_filtered;
    summary["instances"] = result.instances.size();
    summary["skipped_references"] = result.skipped_references;
    summary["cv_accuracy"] = result.cv.accuracy_percent;
    summary["predictors"] = format_predictor_list(config.predictors);
    summary["warnings"] = normalized.stats.warnings;
    w.json("summary.json", summary.dump());
  });
  return result;
}

}  // namespace wordorder
