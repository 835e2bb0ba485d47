#include <fstream>
#include <map>
#include <sstream>

#include "doctest.h"
#include "test_support.h"
#include "wordorder/errors.h"
#include "wordorder/pipeline.h"
#include "wordorder/relation_map.h"

using namespace wordorder;
using namespace wordorder::testing;
namespace fs = std::filesystem;

namespace {

// Created once per name; scratch_dir wipes on every call.
fs::path out_dir(const std::string &name) {
  static std::map<std::string, fs::path> made;
  auto it = made.find(name);
  if (it == made.end()) it = made.emplace(name, scratch_dir(name)).first;
  return it->second;
}

ExperimentConfig mini_config(const std::string &out) {
  const fs::path root = source_dir() / "data/mini";
  ExperimentConfig c;
  c.treebanks = {root / "treebank.conllu"};
  c.relation_map = root / "relations.conf";
  c.lm_corpus = root / "lm_corpus.txt";
  c.variant_seed = 20240601;
  c.cv_seed = 7;
  c.judgment_items = 20;
  c.judgment_seed = 11;
  c.output_dir = out_dir(out);
  return c;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const PipelineResult &mini_result() {
  static const PipelineResult r = run_pipeline(mini_config("pipeline_a"));
  return r;
}

}  // namespace

TEST_CASE("mini experiment runs end to end") {
  const auto &r = mini_result();
  CHECK(r.sentences >= 20);
  CHECK(r.eligible > 0);
  CHECK(r.eligible <= r.sentences);
  std::size_t ineligible = 0;
  for (const auto &[reason, n] : r.ineligible_reasons) ineligible += n > 0;
  CHECK(ineligible > 0);
  CHECK(r.instances.size() >= 2);
  CHECK(r.fit.names.front() == "(Intercept)");
  CHECK(r.fit.names.size() == 4);
  CHECK(r.cv.fold.size() == r.instances.size());
  CHECK(r.lr_tests.size() == 3);
  CHECK(r.judgment_items.size() == 20);
  CHECK(r.config_hash.size() == 16);
  // three single rows then two cumulative rows
  REQUIRE(r.ablation.size() == 5);
  CHECK(r.ablation[3].model == "deplen+is");
  CHECK(r.ablation[4].model == "deplen+is+trigram");
  CHECK(r.ablation[4].mcnemar.has_value());
  CHECK(r.ablation[4].cv.accuracy_percent == doctest::Approx(r.cv.accuracy_percent));
  const auto osv = std::find_if(r.distribution.rows.begin(), r.distribution.rows.end(),
                                [](const DistributionRow &d) { return d.order_type == OrderType::kOsvDoFronted; });
  CHECK(osv->references + r.distribution.rows[2].references >= 2);
}

TEST_CASE("distribution table matches the written variants") {
  const auto &r = mini_result();
  const fs::path dir = mini_config("pipeline_a").output_dir;
  std::ifstream in(dir / "variants.conllu");
  const auto trees = parse_treebank(in);
  std::map<std::string, std::pair<std::size_t, std::size_t>> counts;
  for (const DepTree &t : trees) {
    const std::string *origin = t.attribute("origin");
    const std::string *type = t.attribute("order_type");
    REQUIRE(origin);
    REQUIRE(type);
    auto &c = counts[*type];
    (*origin == "reference" ? c.first : c.second)++;
  }
  std::size_t refs = 0, vars = 0;
  for (const DistributionRow &row : r.distribution.rows) {
    const auto &c = counts[std::string(to_string(row.order_type))];
    CHECK(row.references == c.first);
    CHECK(row.variants == c.second);
    refs += row.references;
    vars += row.variants;
  }
  CHECK(refs == r.distribution.total_references);
  CHECK(vars == r.distribution.total_variants);
  CHECK(refs == r.eligible);

  // re-deriving each reference's order type from the source treebank agrees
  const auto relations = RelationMap::load((source_dir() / "data/mini/relations.conf").string());
  std::map<std::string, std::string> source_type;
  for (const DepTree &t : load_treebank((source_dir() / "data/mini/treebank.conllu").string()))
    if (check_eligibility(t, relations).eligible)
      source_type[t.sentence_id()] = std::string(to_string(describe_sentence(t, relations).order_type));
  for (const DepTree &t : trees)
    if (*t.attribute("origin") == "reference") CHECK(source_type.at(t.sentence_id()) == *t.attribute("order_type"));
}

TEST_CASE("outputs are deterministic and stamped") {
  const auto &a = mini_result();
  const auto b = run_pipeline(mini_config("pipeline_b"));
  REQUIRE(a.outputs.size() == b.outputs.size());
  const fs::path da = mini_config("pipeline_a").output_dir, db = mini_config("pipeline_b").output_dir;
  for (const fs::path &p : a.outputs) {
    const auto name = p.filename();
    CHECK_MESSAGE(slurp(da / name) == slurp(db / name), name.string());
    const std::string text = slurp(da / name);
    CHECK_MESSAGE(text.find("artifact: wordorder 0.1.0") != std::string::npos, name.string());
    CHECK_MESSAGE(text.find(a.config_hash) != std::string::npos, name.string());
    CHECK_MESSAGE(text.find("variant_seed=20240601") != std::string::npos, name.string());
  }
  CHECK(a.config_hash == b.config_hash);
  CHECK(a.cv.probability == b.cv.probability);
}

TEST_CASE("config hash") {
  auto a = mini_config("x");
  auto b = mini_config("y");
  CHECK(config_hash(a) == config_hash(b));
  CHECK(canonical_config(a).find("output") == std::string::npos);
  b.cv_seed = 8;
  CHECK(config_hash(a) != config_hash(b));
  const auto header = output_header(a);
  REQUIRE(header.size() == 3);
  CHECK(header[0] == "artifact: wordorder 0.1.0");
  CHECK(header[1] == "config_hash: " + config_hash(a));
}

TEST_CASE("configuration errors name the stage and input") {
  SUBCASE("missing lstm sidecar") {
    auto c = mini_config("bad_lstm");
    c.predictors.push_back(Predictor::kAdaptiveLstmSurprisal);
    c.lstm_sidecar = "/nonexistent/lstm.tsv";
    try {
      run_pipeline(c);
      FAIL("expected StageError");
    } catch (const StageError &e) {
      CHECK(e.stage() == "config");
      CHECK(std::string(e.what()).find("/nonexistent/lstm.tsv") != std::string::npos);
    }
  }
  SUBCASE("lstm predictor without a sidecar") {
    auto c = mini_config("bad_lstm2");
    c.predictors.push_back(Predictor::kAdaptiveLstmSurprisal);
    CHECK_THROWS_AS(validate_config(c), StageError);
  }
  SUBCASE("missing treebank") {
    auto c = mini_config("bad_tb");
    c.treebanks = {"/nonexistent/tb.conllu"};
    CHECK_THROWS_AS(run_pipeline(c), StageError);
  }
  SUBCASE("folds") {
    auto c = mini_config("bad_folds");
    c.folds = 1;
    CHECK_THROWS_AS(validate_config(c), StageError);
  }
}

TEST_CASE("model choices follow CV correctness") {
  const auto &r = mini_result();
  const auto picks = model_choices(r.judgment_items, r.instances, r.cv);
  CHECK(picks.size() == r.judgment_items.size());
  std::map<std::pair<std::string, std::string>, bool> correct;
  for (std::size_t i = 0; i < r.instances.size(); ++i)
    correct[{r.instances[i].ref_id, r.instances[i].var_id}] = r.cv.correct[i];
  for (const auto &item : r.judgment_items) CHECK(picks.at(item.item_id) == correct.at({item.ref_id, item.var_id}));

  std::ifstream pred(mini_config("pipeline_a").output_dir / "cv_predictions.tsv");
  CHECK(read_cv_predictions(pred) == correct);
}
