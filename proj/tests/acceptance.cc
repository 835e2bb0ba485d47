// One PASS/FAIL line per acceptance criterion; exits nonzero on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "test_support.h"
#include "wordorder/errors.h"
#include "wordorder/features.h"
#include "wordorder/ngram.h"
#include "wordorder/pipeline.h"
#include "wordorder/stats.h"
#include "wordorder/variants.h"

using namespace wordorder;
using namespace wordorder::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

struct Criterion {
  std::string name;
  double time_limit;  // seconds, 0 = none
  std::function<Outcome()> run;
};

std::string fmt(const char *f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

Outcome deplen_oracle_check() {
  Rng rng(501);
  RelationMap config;
  std::size_t mismatches = 0;
  for (int i = 0; i < 500; ++i) {
    const auto heads = random_projective_heads(rng, 1 + rng.uniform(10));
    if (dependency_length(tree_from_heads(heads), config) != deplen_oracle(heads)) ++mismatches;
  }
  return {mismatches == 0, std::to_string(mismatches) + "/500 mismatches"};
}

Outcome projectivity_oracle_check() {
  Rng rng(502);
  std::size_t mismatches = 0, projective = 0;
  for (int i = 0; i < 500; ++i) {
    const std::size_t n = 2 + rng.uniform(9);
    const auto heads = i % 2 ? random_heads(rng, n) : random_projective_heads(rng, n);
    const bool expected = projective_oracle(heads);
    projective += expected;
    if (is_projective(tree_from_heads(heads)) != expected) ++mismatches;
  }
  return {mismatches == 0, std::to_string(mismatches) + "/500 mismatches, " + std::to_string(projective) +
                               " projective"};
}

DepTree flat_sentence(int n) {
  static const char *labels[] = {"k1", "k2", "k7t", "k7p", "adv"};
  static const char *forms[] = {"raam", "kitaab", "kal", "ghar", "jaldii"};
  std::vector<Row> rows;
  for (int i = 0; i < n; ++i) rows.push_back({forms[i], "NOUN", "NN", n + 1, labels[i]});
  rows.push_back({"diyaa", "VERB", "VM", 0, "main"});
  rows.push_back({".", "PUNCT", "SYM", n + 1, "rsym"});
  return make_tree("flat" + std::to_string(n), rows);
}

Outcome variant_count_check() {
  const RelationMap config;
  const std::size_t expected[] = {1, 5, 23, 99};
  std::string detail;
  bool ok = true;
  for (int n = 2; n <= 5; ++n) {
    const std::size_t got = generate_variants(flat_sentence(n), config, 99, 1).size();
    ok = ok && got == expected[n - 2];
    detail += (n > 2 ? " " : "") + std::string("n=") + std::to_string(n) + ":" + std::to_string(got);
  }
  return {ok, detail};
}

Outcome trigram_normalization_check() {
  std::ifstream in(source_dir() / "data/mini/lm_corpus.txt");
  const auto corpus = read_corpus(in);
  const auto m = TrigramModel::train(corpus);
  const auto symbols = m.predicted_symbols();
  std::vector<TrigramModel::WordId> contexts{TrigramModel::kBos};
  for (auto s : symbols)
    if (s != TrigramModel::kEos) contexts.push_back(s);
  Rng rng(503);
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    TrigramModel::WordId u, v;
    if (i % 2 == 0) {
      const auto &s = corpus[rng.uniform(corpus.size())];
      const std::size_t pos = rng.uniform(s.size() + 1);
      u = pos >= 2 ? m.id(s[pos - 2]) : TrigramModel::kBos;
      v = pos >= 1 ? m.id(s[pos - 1]) : TrigramModel::kBos;
    } else {
      u = contexts[rng.uniform(contexts.size())];
      v = contexts[rng.uniform(contexts.size())];
    }
    double sum = 0;
    for (auto w : symbols) sum += m.probability(u, v, w);
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  return {worst <= 1e-9, "max |sum - 1| = " + fmt("%.3g", worst)};
}

Outcome logistic_recovery_check() {
  Rng rng(504);
  const std::size_t n = 20000;
  Eigen::MatrixXd x(n, 2);
  Eigen::VectorXd y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = rng.normal();
    x(i, 1) = rng.normal();
    const double eta = 1.5 * x(i, 0) - 2.0 * x(i, 1);
    y(i) = rng.bernoulli(1.0 / (1.0 + std::exp(-eta)));
  }
  const auto fit = fit_logistic(x, y, {"x1", "x2"});
  const double truth[] = {0.0, 1.5, -2.0};
  double worst = 0;
  for (int j = 0; j < 3; ++j) worst = std::max(worst, std::abs(fit.coefficients[j] - truth[j]) / fit.std_errors[j]);

  Eigen::MatrixXd none(100, 0);
  Eigen::VectorXd skew(100);
  for (int i = 0; i < 100; ++i) skew(i) = i % 4 != 0;
  const auto base = fit_logistic(none, skew, {});
  const double err = std::abs(base.coefficients[0] - std::log(3.0));
  return {worst < 3.0 && err < 1e-4,
          "max |b - truth|/se = " + fmt("%.2f", worst) + ", |b0 - ln 3| = " + fmt("%.2g", err)};
}

Outcome vif_check() {
  const int n = 2000;
  Rng rng(505);
  Eigen::MatrixXd raw(n, 2);
  for (int i = 0; i < n; ++i) raw.row(i) << rng.normal(), rng.normal();
  for (int j = 0; j < 2; ++j) raw.col(j).array() -= raw.col(j).mean();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, 2);
  const auto orth = compute_vif(q);
  Eigen::MatrixXd corr(n, 2);
  corr.col(0) = q.col(0);
  corr.col(1) = 0.6 * q.col(0) + 0.8 * q.col(1);
  const auto c = compute_vif(corr);
  const double e_orth = std::max(std::abs(orth[0] - 1), std::abs(orth[1] - 1));
  const double e_corr = std::max(std::abs(c[0] - 1.5625), std::abs(c[1] - 1.5625));
  return {e_orth <= 1e-9 && e_corr <= 1e-6,
          "r=0.6 VIF " + fmt("%.8f", c[0]) + ", orthogonal error " + fmt("%.2g", e_orth)};
}

double mcnemar_oracle(unsigned b, unsigned c) {
  const unsigned n = b + c;
  if (n == 0) return 1.0;
  const unsigned k = std::min(b, c);
  std::uint64_t choose = 1, tail = 0;
  for (unsigned i = 0; i <= k; ++i) {
    if (i > 0) choose = choose * (n - i + 1) / i;
    tail += choose;
  }
  return std::min(1.0, 2.0 * std::ldexp(static_cast<double>(tail), -static_cast<int>(n)));
}

Outcome mcnemar_check() {
  double worst = 0;
  for (unsigned b = 0; b <= 30; ++b)
    for (unsigned c = 0; c <= 30; ++c) worst = std::max(worst, std::abs(mcnemar_exact_p(b, c) - mcnemar_oracle(b, c)));
  const double p = mcnemar_exact_p(10, 2);
  return {worst <= 1e-12 && std::abs(p - 0.0386) < 5e-5,
          "max error " + fmt("%.2g", worst) + ", p(10,2) = " + fmt("%.5f", p)};
}

double kolmogorov_tail(double lambda) {
  double sum = 0;
  for (int k = 1; k < 100; ++k) sum += (k % 2 ? 2.0 : -2.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(sum, 0.0, 1.0);
}

Outcome null_calibration_check() {
  Rng rng(506);
  std::vector<double> ps;
  const int n = 200;
  for (int r = 0; r < 1000; ++r) {
    Eigen::MatrixXd x(n, 2);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      x(i, 0) = rng.normal();
      x(i, 1) = rng.normal();
      y(i) = rng.bernoulli(1.0 / (1.0 + std::exp(-(0.3 + 0.8 * x(i, 0)))));
    }
    const auto full = fit_logistic(x, y, {"a", "null"});
    const auto reduced = fit_logistic(x.leftCols(1), y, {"a"});
    ps.push_back(likelihood_ratio_test(full, reduced).p_value);
  }
  std::sort(ps.begin(), ps.end());
  double d = 0;
  const double m = static_cast<double>(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i)
    d = std::max({d, (static_cast<double>(i) + 1) / m - ps[i], ps[i] - static_cast<double>(i) / m});
  const double p = kolmogorov_tail(std::sqrt(m) * d);
  return {p > 0.01, "KS D = " + fmt("%.4f", d) + ", p = " + fmt("%.3f", p)};
}

Outcome subsumption_check() {
  Rng rng(507);
  const std::size_t n = 3000;
  std::vector<PairInstance> inst;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = rng.normal();
    // D is a noisy monotone transform of S; labels depend on S only
    const double d = std::sinh(s) + 0.5 * rng.normal();
    PairInstance p;
    p.ref_id = "r" + std::to_string(i);
    p.var_id = p.ref_id + ".v1";
    p.label = rng.bernoulli(1.0 / (1.0 + std::exp(-1.5 * s)));
    p.delta = {d, s};
    inst.push_back(p);
  }
  const std::vector<Predictor> avail{Predictor::kDependencyLength, Predictor::kTrigramSurprisal};
  const std::vector<Predictor> only_d{Predictor::kDependencyLength}, only_s{Predictor::kTrigramSurprisal};
  CvOptions o;
  o.seed = 508;
  const auto cv_d = kfold_cv(inst, select_predictors(avail, only_d), o);
  const auto cv_s = kfold_cv(inst, select_predictors(avail, only_s), o);
  const auto cv_sd = kfold_cv(inst, all_predictors(avail), o);
  std::size_t correct_d = 0;
  for (bool c : cv_d.correct) correct_d += c;
  const auto [lo, hi] = binomial_interval(correct_d, n, 0.99);
  const auto mc = mcnemar_test(cv_sd.correct, cv_s.correct);
  const bool gain_significant = mc.p_value < 0.05 && mc.b > mc.c;
  return {lo > 0.5 && !gain_significant,
          "D alone " + fmt("%.2f%%", cv_d.accuracy_percent) + " CI [" + fmt("%.3f", lo) + ", " + fmt("%.3f", hi) +
              "], S " + fmt("%.2f%%", cv_s.accuracy_percent) + ", S+D " + fmt("%.2f%%", cv_sd.accuracy_percent) +
              ", McNemar b=" + std::to_string(mc.b) + " c=" + std::to_string(mc.c) + " p=" + fmt("%.3f", mc.p_value)};
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism_check() {
  const fs::path root = source_dir() / "data/mini";
  ExperimentConfig c;
  c.treebanks = {root / "treebank.conllu"};
  c.relation_map = root / "relations.conf";
  c.lm_corpus = root / "lm_corpus.txt";
  c.variant_seed = 20240601;
  c.cv_seed = 7;
  c.judgment_items = 20;
  c.judgment_seed = 11;
  const fs::path dir_a = scratch_dir("acceptance_a"), dir_b = scratch_dir("acceptance_b");
  c.output_dir = dir_a;
  const auto a = run_pipeline(c);
  c.output_dir = dir_b;
  const auto b = run_pipeline(c);
  std::size_t differing = 0;
  for (const fs::path &p : a.outputs)
    if (slurp(p) != slurp(dir_b / p.filename())) ++differing;
  std::size_t osv = 0;
  for (const auto &row : a.distribution.rows)
    if (row.order_type == OrderType::kOsvDoFronted || row.order_type == OrderType::kOsvIoFronted)
      osv += row.references;
  const bool ok = differing == 0 && a.outputs.size() == b.outputs.size() && a.sentences >= 20 && osv >= 2;
  return {ok, std::to_string(a.outputs.size()) + " outputs, " + std::to_string(differing) + " differ; " +
                  std::to_string(a.sentences) + " sentences, " + std::to_string(osv) + " OSV references"};
}

OrderedSentence is_target(const std::string &subject, const std::string &object, bool object_first) {
  const Row s{subject, "PROPN", "NNP", 4, "k1"};
  const Row o{object, "NOUN", "NN", 4, "k2"};
  Row ne{"ne", "ADP", "PSP", 1, "lwg__psp"};
  std::vector<Row> rows;
  if (object_first) {
    ne.head = 2;
    rows = {o, s, ne};
  } else {
    rows = {s, ne, o};
  }
  rows.push_back({"dekhaa", "VERB", "VM", 0, "main"});
  rows.push_back({".", "PUNCT", "SYM", 4, "rsym"});
  return make_reference(make_tree("t", rows), RelationMap{});
}

Outcome is_coding_check() {
  const auto context = [](const std::vector<std::string> &nouns) {
    std::vector<Row> rows;
    for (const auto &w : nouns) rows.push_back({w, "NOUN", "NN", static_cast<int>(nouns.size()) + 1, "k7"});
    rows.push_back({"thaa", "VERB", "VM", 0, "main"});
    return make_tree("c", rows).tokens();
  };
  struct Case {
    std::vector<std::string> given;
    bool object_first;
    int expected;
  };
  // subject raam, object kitaab
  const std::vector<Case> cases{
      {{"raam"}, false, 1},             // given subject before new object
      {{"kitaab"}, false, -1},          // new subject before given object
      {{"kitaab"}, true, 1},            // fronted given object
      {{"raam"}, true, -1},             // fronted new object
      {{"raam", "kitaab"}, false, 0},   // given-given
      {{"raam", "kitaab"}, true, 0},
      {{"ghar"}, false, 0},             // new-new
      {{"ghar"}, true, 0},
  };
  std::size_t wrong = 0;
  for (const Case &c : cases) {
    const auto a = annotate_information_status({context(c.given), is_target("raam", "kitaab", c.object_first)},
                                               RelationMap{});
    if (a.score != c.expected) ++wrong;
  }
  return {wrong == 0, std::to_string(cases.size() - wrong) + "/" + std::to_string(cases.size()) + " cases"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"dependency-length oracle equivalence", 5, deplen_oracle_check},
      {"projectivity oracle equivalence", 5, projectivity_oracle_check},
      {"variant counts", 0, variant_count_check},
      {"trigram normalization", 0, trigram_normalization_check},
      {"logistic recovery", 30, logistic_recovery_check},
      {"VIF closed form", 0, vif_check},
      {"McNemar exactness", 0, mcnemar_check},
      {"null-test calibration", 0, null_calibration_check},
      {"subsumption reproduction", 60, subsumption_check},
      {"end-to-end determinism", 60, determinism_check},
      {"IS coding", 0, is_coding_check},
  };
  int failures = 0;
  for (const Criterion &c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception &e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.time_limit > 0 && secs >= c.time_limit) {
      out.ok = false;
      out.detail += "; over the " + fmt("%.0f", c.time_limit) + " s limit";
    }
    failures += !out.ok;
    std::printf("%s  %s  (%s; %.2f s)\n", out.ok ? "PASS" : "FAIL", c.name.c_str(), out.detail.c_str(), secs);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
