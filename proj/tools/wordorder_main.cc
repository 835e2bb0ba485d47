// wordorder: command-line driver for the word-order ranking experiment.

#include <cstdio>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "wordorder/errors.h"
#include "wordorder/features.h"
#include "wordorder/judgments.h"
#include "wordorder/ngram.h"
#include "wordorder/pairrank.h"
#include "wordorder/pipeline.h"
#include "wordorder/random.h"
#include "wordorder/relation_map.h"
#include "wordorder/server.h"
#include "wordorder/stats.h"
#include "wordorder/treebank.h"
#include "wordorder/variants.h"

namespace fs = std::filesystem;
using namespace wordorder;

namespace {

// Output sink: a file, or stdout for "-" / empty.
class Output {
 public:
  explicit Output(const std::string &path) {
    if (!path.empty() && path != "-") {
      file_.open(path, std::ios::binary);
      if (!file_) throw UsageError("cannot write '" + path + "'");
    }
  }
  std::ostream &stream() { return file_.is_open() ? static_cast<std::ostream &>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

std::ifstream open_input(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read '" + path + "'");
  return in;
}

RelationMap load_relations(const std::string &path) {
  return path.empty() ? RelationMap{} : RelationMap::load(path);
}

// Header lines for a subcommand's outputs: artifact version, a hash of the
// non-output options, and the seeds in play.
std::vector<std::string> header_for(const CLI::App &app, const std::string &seeds) {
  std::istringstream cfg(app.config_to_str(true, false));
  std::string line, canonical;
  while (std::getline(cfg, line)) {
    if (line.rfind("out", 0) == 0 || line.rfind("json", 0) == 0) continue;
    canonical += line + "\n";
  }
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a64(app.get_name() + "\n" + canonical)));
  return {"artifact: " + std::string(kArtifactVersion), "config_hash: " + std::string(hash),
          "seeds: " + (seeds.empty() ? std::string("none") : seeds)};
}

std::vector<OrderedSentence> read_ordered(const std::string &path, const RelationMap &relations) {
  std::vector<OrderedSentence> out;
  for (const DepTree &t : load_treebank(path)) out.push_back(describe_sentence(t, relations));
  return out;
}

// sentence_id -> preceding sentence of the same document.
std::map<std::string, const DepTree *> context_index(const std::vector<DepTree> &trees) {
  std::map<std::string, const DepTree *> out;
  const auto previous = preceding_sentences(trees);
  for (std::size_t i = 0; i < trees.size(); ++i) out[trees[i].sentence_id()] = previous[i];
  return out;
}

std::vector<PairInstance> select_subset(std::vector<PairInstance> instances, const std::string &subset) {
  if (subset.empty() || subset == "overall") return instances;
  const Subset s = parse_subset(subset);
  std::erase_if(instances, [&](const PairInstance &i) { return !in_subset(i.construction, s); });
  return instances;
}

JudgmentServer *g_server = nullptr;
void handle_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Counterfactual word-order variants, cognitive predictors and pairwise ranking"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kArtifactVersion));

  // ingest
  auto *ingest = app.add_subcommand("ingest", "Parse a treebank and keep eligible sentences");
  std::string ingest_treebank, ingest_relations, ingest_out, ingest_report;
  ingest->add_option("--treebank", ingest_treebank, "CoNLL-U treebank")->required()->check(CLI::ExistingFile);
  ingest->add_option("--relations", ingest_relations, "Relation map config")->check(CLI::ExistingFile);
  ingest->add_option("--out", ingest_out, "Eligible sentences (CoNLL-U)");
  ingest->add_option("--report", ingest_report, "Per-sentence eligibility table");

  // variants
  auto *variants = app.add_subcommand("variants", "Generate and filter word-order variants");
  std::string var_treebank, var_relations, var_rules, var_out;
  std::size_t var_cap = kDefaultVariantCap;
  std::uint64_t var_seed = 1;
  bool var_no_filter = false;
  variants->add_option("--treebank", var_treebank, "Eligible sentences (CoNLL-U)")->required()->check(CLI::ExistingFile);
  variants->add_option("--relations", var_relations, "Relation map config")->check(CLI::ExistingFile);
  variants->add_option("--rules-treebank", var_rules, "Treebank the order rules are learnt from (default: --treebank)")
      ->check(CLI::ExistingFile);
  variants->add_option("--cap", var_cap, "Maximum variants per reference")->capture_default_str();
  variants->add_option("--seed", var_seed, "Sampling seed")->capture_default_str();
  variants->add_flag("--no-filter", var_no_filter, "Keep variants the order rules reject");
  variants->add_option("--out", var_out, "References and variants (CoNLL-U)");

  // train-lm
  auto *train = app.add_subcommand("train-lm", "Train the trigram language model");
  std::string lm_corpus, lm_out;
  long long lm_min_count = 2;
  train->add_option("--corpus", lm_corpus, "One tokenized sentence per line")->required()->check(CLI::ExistingFile);
  train->add_option("--min-count", lm_min_count, "Words rarer than this map to <unk>")->capture_default_str();
  train->add_option("--out", lm_out, "Model file")->required();

  // features
  auto *features = app.add_subcommand("features", "Compute per-sentence predictors");
  std::string feat_variants, feat_treebank, feat_relations, feat_lm, feat_pcfg, feat_lstm, feat_out;
  features->add_option("--variants", feat_variants, "Output of `variants`")->required()->check(CLI::ExistingFile);
  features->add_option("--treebank", feat_treebank, "Source treebank, for discourse context")->check(CLI::ExistingFile);
  features->add_option("--relations", feat_relations, "Relation map config")->check(CLI::ExistingFile);
  features->add_option("--lm", feat_lm, "Trigram model")->required()->check(CLI::ExistingFile);
  features->add_option("--pcfg", feat_pcfg, "PCFG surprisal sidecar")->check(CLI::ExistingFile);
  features->add_option("--lstm", feat_lstm, "Adaptive LSTM surprisal sidecar")->check(CLI::ExistingFile);
  features->add_option("--out", feat_out, "Feature table");

  // transform
  auto *transform = app.add_subcommand("transform", "Build pairwise ranking instances");
  std::string tr_features, tr_predictors = "deplen,is,trigram", tr_out, tr_stats;
  transform->add_option("--features", tr_features, "Feature table")->required()->check(CLI::ExistingFile);
  transform->add_option("--predictors", tr_predictors, "Comma-separated predictors")->capture_default_str();
  transform->add_option("--out", tr_out, "Pairwise instances (raw deltas)");
  transform->add_option("--stats-out", tr_stats, "Z-score statistics of the deltas");

  // fit
  auto *fit = app.add_subcommand("fit", "Fit the logistic ranking model");
  std::string fit_pairs, fit_predictors, fit_subset, fit_out, fit_json, fit_reduced;
  bool fit_no_intercept = false;
  fit->add_option("--pairs", fit_pairs, "Pairwise instances")->required()->check(CLI::ExistingFile);
  fit->add_option("--predictors", fit_predictors, "Predictor subset (default: all columns)");
  fit->add_option("--subset", fit_subset, "Restrict to a construction subset (OSV, DOSV, IOSV, canonical, other)");
  fit->add_option("--reduced", fit_reduced, "Also fit this nested predictor set and run a likelihood-ratio test");
  fit->add_flag("--no-intercept", fit_no_intercept, "Fit without an intercept");
  fit->add_option("--out", fit_out, "Coefficient table");
  fit->add_option("--json", fit_json, "Coefficient table as JSON");

  // cv
  auto *cv = app.add_subcommand("cv", "Grouped k-fold cross-validated classification");
  std::string cv_pairs, cv_predictors, cv_out, cv_json;
  std::size_t cv_folds = 10;
  std::uint64_t cv_seed = 1;
  cv->add_option("--pairs", cv_pairs, "Pairwise instances")->required()->check(CLI::ExistingFile);
  cv->add_option("--predictors", cv_predictors, "Predictor subset (default: all columns)");
  cv->add_option("--folds", cv_folds, "Number of folds")->capture_default_str();
  cv->add_option("--seed", cv_seed, "Fold assignment seed")->capture_default_str();
  cv->add_option("--out", cv_out, "Per-instance predictions");
  cv->add_option("--json", cv_json, "Report as JSON");

  // mcnemar
  auto *mcnemar = app.add_subcommand("mcnemar", "Compare two CV prediction tables");
  std::string mc_a, mc_b;
  mcnemar->add_option("--a", mc_a, "Predictions of model A")->required()->check(CLI::ExistingFile);
  mcnemar->add_option("--b", mc_b, "Predictions of model B")->required()->check(CLI::ExistingFile);

  // export-judgments
  auto *exportj = app.add_subcommand("export-judgments", "Sample 2AFC items");
  std::string ex_pairs, ex_variants, ex_treebank, ex_out;
  std::size_t ex_n = 164;
  std::uint64_t ex_seed = 1;
  exportj->add_option("--pairs", ex_pairs, "Pairwise instances")->required()->check(CLI::ExistingFile);
  exportj->add_option("--variants", ex_variants, "Output of `variants`")->required()->check(CLI::ExistingFile);
  exportj->add_option("--treebank", ex_treebank, "Source treebank, for discourse context")->check(CLI::ExistingFile);
  exportj->add_option("-n,--count", ex_n, "Number of items")->capture_default_str();
  exportj->add_option("--seed", ex_seed, "Sampling seed")->capture_default_str();
  exportj->add_option("--out", ex_out, "Item file (JSON)");

  // serve
  auto *serve = app.add_subcommand("serve", "Serve items and collect judgments over HTTP");
  std::string sv_items, sv_store, sv_host = "127.0.0.1";
  int sv_port = 8080;
  std::uint64_t sv_seed = 1;
  serve->add_option("--items", sv_items, "Item file")->required()->check(CLI::ExistingFile);
  serve->add_option("--store", sv_store, "Judgment log (JSON lines)")->required();
  serve->add_option("--host", sv_host)->capture_default_str();
  serve->add_option("--port", sv_port)->capture_default_str()->check(CLI::Range(0, 65535));
  serve->add_option("--order-seed", sv_seed, "Seed for per-rater item order")->capture_default_str();

  // agreement
  auto *agreement = app.add_subcommand("agreement", "Human, corpus and model agreement");
  std::string ag_items, ag_judgments, ag_cv, ag_out, ag_json;
  agreement->add_option("--items", ag_items, "Item file")->required()->check(CLI::ExistingFile);
  agreement->add_option("--judgments", ag_judgments, "Judgment log")->required()->check(CLI::ExistingFile);
  agreement->add_option("--cv", ag_cv, "CV predictions covering the items")->required()->check(CLI::ExistingFile);
  agreement->add_option("--out", ag_out, "Agreement table");
  agreement->add_option("--json", ag_json, "Agreement table as JSON");

  // run
  app.set_config("--config", "", "INI configuration file; `run` options go in its [run] section");
  auto *run = app.add_subcommand("run", "Run the whole experiment from a configuration");
  run->fallthrough();
  ExperimentConfig rc;
  std::vector<std::string> run_treebanks;
  std::string run_relations, run_lm_corpus, run_lm_model, run_pcfg, run_lstm, run_out = "out";
  std::vector<std::string> run_predictors{"deplen", "is", "trigram"};
  run->add_option("--treebank", run_treebanks, "Treebank file(s)")->required();
  run->add_option("--relations", run_relations, "Relation map config");
  run->add_option("--lm-corpus", run_lm_corpus, "Trigram training corpus");
  run->add_option("--lm-model", run_lm_model, "Pretrained trigram model");
  run->add_option("--lm-min-count", rc.lm_min_count)->capture_default_str();
  run->add_option("--pcfg-sidecar", run_pcfg, "PCFG surprisal sidecar");
  run->add_option("--lstm-sidecar", run_lstm, "Adaptive LSTM surprisal sidecar");
  run->add_option("--variant-cap", rc.variant_cap)->capture_default_str();
  run->add_option("--variant-seed", rc.variant_seed)->capture_default_str();
  run->add_option("--filter-variants", rc.filter_variants)->capture_default_str();
  run->add_option("--predictors", run_predictors, "Comma-separated predictors")->delimiter(',')->capture_default_str();
  run->add_option("--folds", rc.folds)->capture_default_str();
  run->add_option("--cv-seed", rc.cv_seed)->capture_default_str();
  run->add_option("--judgment-items", rc.judgment_items)->capture_default_str();
  run->add_option("--judgment-seed", rc.judgment_seed)->capture_default_str();
  run->add_option("--output-dir", run_out)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  std::string stage = app.get_subcommands().front()->get_name();
  try {
    if (*ingest) {
      const RelationMap relations = load_relations(ingest_relations);
      auto in = open_input(ingest_treebank);
      const std::vector<DepTree> trees = parse_treebank(in);
      const auto header = header_for(*ingest, "");
      Output out(ingest_out);
      for (const std::string &h : header) out.stream() << "# " << h << '\n';
      out.stream() << '\n';
      std::optional<Output> report;
      if (!ingest_report.empty()) {
        report.emplace(ingest_report);
        for (const std::string &h : header) report->stream() << "# " << h << '\n';
        report->stream() << "sentence_id\teligible\treasons\n";
      }
      std::size_t kept = 0;
      for (const DepTree &t : trees) {
        const EligibilityReport r = check_eligibility(t, relations);
        if (r.eligible) {
          write_tree(out.stream(), t);
          ++kept;
        }
        if (report) {
          std::vector<std::string_view> reasons;
          for (EligibilityFailure f : r.reasons) reasons.push_back(to_string(f));
          std::string joined;
          for (auto s : reasons) joined += (joined.empty() ? "" : ",") + std::string(s);
          report->stream() << t.sentence_id() << '\t' << (r.eligible ? 1 : 0) << '\t'
                           << (joined.empty() ? "-" : joined) << '\n';
        }
      }
      std::cerr << kept << " of " << trees.size() << " sentences eligible\n";
    } else if (*variants) {
      const RelationMap relations = load_relations(var_relations);
      const std::vector<DepTree> trees = load_treebank(var_treebank);
      const std::vector<DepTree> rule_trees = var_rules.empty() ? trees : load_treebank(var_rules);
      std::vector<DepTree> eligible_rules;
      for (const DepTree &t : rule_trees)
        if (check_eligibility(t, relations).eligible) eligible_rules.push_back(t);
      const OrderRuleSet rules = learn_order_rules(eligible_rules, relations);
      Output out(var_out);
      for (const std::string &h : header_for(*variants, "seed=" + std::to_string(var_seed)))
        out.stream() << "# " << h << '\n';
      out.stream() << '\n';
      std::size_t generated = 0, kept = 0, refs = 0;
      for (const DepTree &t : trees) {
        if (!check_eligibility(t, relations).eligible) continue;
        stage = "variants " + t.sentence_id();
        auto vs = generate_variants(t, relations, var_cap, derive_seed(var_seed, t.sentence_id()));
        generated += vs.size();
        if (!var_no_filter) vs = filter_grammatical(vs, rules);
        kept += vs.size();
        ++refs;
        write_ordered_sentence(out.stream(), make_reference(t, relations));
        for (const OrderedSentence &v : vs) write_ordered_sentence(out.stream(), v);
      }
      std::cerr << refs << " references, " << generated << " variants generated, " << kept << " kept\n";
    } else if (*train) {
      auto in = open_input(lm_corpus);
      TrigramOptions options;
      options.min_count = lm_min_count;
      const TrigramModel model = TrigramModel::train(read_corpus(in), options);
      model.save_file(lm_out);
      std::cerr << "vocabulary " << model.symbol_count() << " symbols\n";
    } else if (*features) {
      const RelationMap relations = load_relations(feat_relations);
      const std::vector<OrderedSentence> sentences = read_ordered(feat_variants, relations);
      const TrigramModel model = TrigramModel::load_file(feat_lm);
      std::vector<DepTree> source;
      if (!feat_treebank.empty()) source = load_treebank(feat_treebank);
      const auto contexts = context_index(source);
      std::optional<SurprisalTotals> pcfg, lstm;
      if (!feat_pcfg.empty()) {
        auto in = open_input(feat_pcfg);
        pcfg = load_external_surprisal(in, sentences);
      }
      if (!feat_lstm.empty()) {
        auto in = open_input(feat_lstm);
        lstm = load_external_surprisal(in, sentences);
      }
      const SurprisalSources sources{pcfg ? &*pcfg : nullptr, lstm ? &*lstm : nullptr};
      std::vector<FeatureRow> rows;
      for (const OrderedSentence &s : sentences) {
        stage = "features " + s.id();
        DiscoursePair pair;
        const auto ctx = contexts.find(s.reference_id);
        if (ctx != contexts.end() && ctx->second) pair.context = ctx->second->tokens();
        pair.target = s;
        rows.push_back({s.id(), s.reference_id, s.origin, s.order_type, featurize(pair, model, relations, sources)});
      }
      Output out(feat_out);
      write_feature_table(out.stream(), rows, header_for(*features, ""));
    } else if (*transform) {
      auto in = open_input(tr_features);
      const auto predictors = parse_predictor_list(tr_predictors);
      const PairwiseResult pairs = pairwise_transform(group_feature_rows(read_feature_table(in)), predictors);
      for (const std::string &w : pairs.warnings) std::cerr << "warning: " << w << '\n';
      const auto header = header_for(*transform, "");
      Output out(tr_out);
      write_pair_table(out.stream(), pairs.instances, predictors, header);
      if (!tr_stats.empty()) {
        const NormalizedInstances norm = zscore_normalize(pairs.instances);
        for (const std::string &w : norm.stats.warnings) std::cerr << "warning: " << w << '\n';
        Output stats(tr_stats);
        write_stats_table(stats.stream(), norm.stats, predictors, header);
      }
      std::cerr << pairs.instances.size() << " instances, " << pairs.skipped_references << " references skipped, "
                << pairs.dropped_incomplete << " variants dropped\n";
    } else if (*fit) {
      auto in = open_input(fit_pairs);
      const PairTable table = read_pair_table(in);
      const auto instances = select_subset(table.instances, fit_subset);
      const auto wanted = fit_predictors.empty() ? table.predictors : parse_predictor_list(fit_predictors);
      FitOptions options;
      options.intercept = !fit_no_intercept;
      const NormalizedInstances norm = zscore_normalize(instances);
      const RegressionFit result = fit_logistic(norm.instances, select_predictors(table.predictors, wanted), options);
      const auto header = header_for(*fit, "");
      Output out(fit_out);
      write_fit_table(out.stream(), result, header);
      if (!fit_reduced.empty()) {
        const RegressionFit small = fit_logistic(
            norm.instances, select_predictors(table.predictors, parse_predictor_list(fit_reduced)), options);
        const LikelihoodRatioTest t = likelihood_ratio_test(result, small);
        out.stream() << "likelihood-ratio test vs " << fit_reduced << ": chi2 = " << t.chi_square
                     << ", df = " << t.df << ", p = " << t.p_value << '\n';
      }
      if (!fit_json.empty()) {
        Output json(fit_json);
        auto j = nlohmann::ordered_json::parse(fit_to_json(result));
        j["artifact"] = header;
        json.stream() << j.dump(2) << '\n';
      }
    } else if (*cv) {
      auto in = open_input(cv_pairs);
      const PairTable table = read_pair_table(in);
      const auto wanted = cv_predictors.empty() ? table.predictors : parse_predictor_list(cv_predictors);
      CvOptions options;
      options.k = cv_folds;
      options.seed = cv_seed;
      const CvReport report = kfold_cv(table.instances, select_predictors(table.predictors, wanted), options);
      const auto header = header_for(*cv, "cv_seed=" + std::to_string(cv_seed));
      Output out(cv_out);
      write_cv_predictions(out.stream(), report, table.instances, header);
      if (!cv_json.empty()) {
        Output json(cv_json);
        auto j = nlohmann::ordered_json::parse(cv_to_json(report, table.instances));
        j["artifact"] = header;
        json.stream() << j.dump(2) << '\n';
      }
      std::cerr << "accuracy " << report.accuracy_percent << "%\n";
    } else if (*mcnemar) {
      auto in_a = open_input(mc_a);
      auto in_b = open_input(mc_b);
      const PairCorrectness a = read_cv_predictions(in_a);
      const PairCorrectness b = read_cv_predictions(in_b);
      if (a.size() != b.size()) throw UsageError("prediction tables cover different instances");
      std::vector<bool> ca, cb;
      for (const auto &[key, correct] : a) {
        const auto it = b.find(key);
        if (it == b.end()) throw UsageError("pair " + key.first + " / " + key.second + " missing from --b");
        ca.push_back(correct);
        cb.push_back(it->second);
      }
      const McNemarResult r = mcnemar_test(ca, cb);
      std::cout << "b\tc\tp_value\n" << r.b << '\t' << r.c << '\t' << r.p_value << '\n';
    } else if (*exportj) {
      auto in = open_input(ex_pairs);
      const PairTable table = read_pair_table(in);
      const std::vector<OrderedSentence> sentences = read_ordered(ex_variants, RelationMap{});
      std::map<std::string, const OrderedSentence *> by_id;
      for (const OrderedSentence &s : sentences) by_id[s.id()] = &s;
      std::map<std::string, std::string> contexts;
      if (!ex_treebank.empty()) {
        const std::vector<DepTree> source = load_treebank(ex_treebank);
        for (const auto &[id, prev] : context_index(source))
          if (prev) contexts[id] = prev->text();
      }
      const auto pool = judgment_pool(table.instances, by_id, contexts);
      const auto items = export_judgment_items(pool, ex_n, ex_seed);
      std::ostringstream body;
      write_items(body, items, ex_seed);
      auto j = nlohmann::ordered_json::parse(body.str());
      j["artifact"] = header_for(*exportj, "seed=" + std::to_string(ex_seed));
      Output out(ex_out);
      out.stream() << j.dump(2) << '\n';
      std::cerr << items.size() << " items from a pool of " << pool.size() << '\n';
    } else if (*serve) {
      auto in = open_input(sv_items);
      JudgmentStore store(sv_store);
      JudgmentService service(read_items(in), store, sv_seed);
      JudgmentServer server(service);
      const int port = server.bind(sv_host, sv_port);
      g_server = &server;
      std::signal(SIGINT, handle_signal);
      std::signal(SIGTERM, handle_signal);
      std::cerr << "serving " << service.items().size() << " items on http://" << sv_host << ':' << port << '\n';
      server.listen();
      g_server = nullptr;
    } else if (*agreement) {
      auto items_in = open_input(ag_items);
      const std::vector<JudgmentItem> items = read_items(items_in);
      auto log_in = open_input(ag_judgments);
      const std::vector<JudgmentRecord> records = read_judgment_log(log_in);
      auto cv_in = open_input(ag_cv);
      const auto choices = model_choices(items, read_cv_predictions(cv_in));
      const AgreementReport report = agreement_stats(records, items, choices);
      const auto header = header_for(*agreement, "");
      Output out(ag_out);
      write_agreement_table(out.stream(), report, header);
      if (!ag_json.empty()) {
        Output json(ag_json);
        auto j = nlohmann::ordered_json::parse(agreement_to_json(report));
        j["artifact"] = header;
        json.stream() << j.dump(2) << '\n';
      }
    } else if (*run) {
      for (const std::string &t : run_treebanks) rc.treebanks.emplace_back(t);
      const auto opt_path = [](const std::string &s) -> std::optional<fs::path> {
        if (s.empty()) return std::nullopt;
        return fs::path(s);
      };
      rc.relation_map = opt_path(run_relations);
      rc.lm_corpus = opt_path(run_lm_corpus);
      rc.lm_model = opt_path(run_lm_model);
      rc.pcfg_sidecar = opt_path(run_pcfg);
      rc.lstm_sidecar = opt_path(run_lstm);
      rc.predictors.clear();
      for (const std::string &p : run_predictors) rc.predictors.push_back(parse_predictor(p));
      rc.output_dir = run_out;
      const PipelineResult result = run_pipeline(rc);
      std::cerr << result.eligible << " of " << result.sentences << " sentences eligible; "
                << result.instances.size() << " instances; CV accuracy "
                << result.cv.accuracy_percent << "%\n";
      for (const fs::path &p : result.outputs) std::cout << p.string() << '\n';
    }
  } catch (const StageError &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception &e) {
    std::cerr << "error: [" << stage << "] " << e.what() << '\n';
    return 1;
  }
  return 0;
}
