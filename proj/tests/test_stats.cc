#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "test_support.h"
#include "wordorder/errors.h"
#include "wordorder/stats.h"

using namespace wordorder;
using namespace wordorder::testing;

namespace {

struct Sim {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
};

Sim simulate(Rng &rng, std::size_t n, double b0, const std::vector<double> &beta) {
  Sim s{Eigen::MatrixXd(n, beta.size()), Eigen::VectorXd(n)};
  for (std::size_t i = 0; i < n; ++i) {
    double eta = b0;
    for (std::size_t j = 0; j < beta.size(); ++j) {
      s.x(i, j) = rng.normal();
      eta += beta[j] * s.x(i, j);
    }
    s.y(i) = rng.bernoulli(1.0 / (1.0 + std::exp(-eta))) ? 1.0 : 0.0;
  }
  return s;
}

// Exact two-sided binomial tail with integer arithmetic.
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

// Kolmogorov distribution upper tail, P(sqrt(n) D > lambda).
double kolmogorov_tail(double lambda) {
  double sum = 0;
  for (int k = 1; k < 100; ++k) sum += (k % 2 ? 2.0 : -2.0) * std::exp(-2.0 * k * k * lambda * lambda);
  return std::clamp(sum, 0.0, 1.0);
}

std::vector<PairInstance> instances_from(const Sim &s, std::size_t group_size = 3) {
  std::vector<PairInstance> out;
  for (Eigen::Index i = 0; i < s.x.rows(); ++i) {
    PairInstance p;
    p.ref_id = "r" + std::to_string(static_cast<std::size_t>(i) / group_size);
    p.var_id = p.ref_id + ".v" + std::to_string(static_cast<std::size_t>(i) % group_size + 1);
    p.label = static_cast<int>(s.y(i));
    for (Eigen::Index j = 0; j < s.x.cols(); ++j) p.delta.push_back(s.x(i, j));
    p.construction = {i % 4 == 0 ? OrderType::kOsvDoFronted : (i % 4 == 1 ? OrderType::kOsvIoFronted : OrderType::kSov),
                      OrderType::kSov};
    out.push_back(p);
  }
  return out;
}

const std::vector<Predictor> kTwo{Predictor::kDependencyLength, Predictor::kTrigramSurprisal};

}  // namespace

TEST_CASE("intercept-only fits") {
  Eigen::MatrixXd none(8, 0);
  Eigen::VectorXd balanced(8), skewed(8);
  balanced << 1, 0, 1, 0, 1, 0, 1, 0;
  skewed << 1, 1, 1, 0, 1, 1, 1, 0;
  const auto a = fit_logistic(none, balanced, {});
  CHECK(std::abs(a.coefficients[0]) < 1e-6);
  const auto b = fit_logistic(none, skewed, {});
  CHECK(std::abs(b.coefficients[0] - std::log(3.0)) < 1e-4);
  CHECK(b.names == std::vector<std::string>{"(Intercept)"});
}

TEST_CASE("coefficient recovery from a simulation") {
  Rng rng(1234);
  const auto s = simulate(rng, 20000, 0.0, {1.5, -2.0});
  const auto fit = fit_logistic(s.x, s.y, {"a", "b"});
  const double truth[] = {0.0, 1.5, -2.0};
  for (int j = 0; j < 3; ++j) {
    CHECK(std::abs(fit.coefficients[j] - truth[j]) < 3 * fit.std_errors[j]);
    CHECK(fit.z_values[j] == fit.coefficients[j] / fit.std_errors[j]);
  }
  CHECK(fit.n == 20000);
  CHECK_FALSE(fit.separated);
}

TEST_CASE("optimum has zero score and Hessian standard errors") {
  Rng rng(77);
  const auto s = simulate(rng, 300, 0.3, {0.8, -0.5, 0.2});
  const auto fit = fit_logistic(s.x, s.y, {"a", "b", "c"});
  Eigen::MatrixXd design(s.x.rows(), 4);
  design.col(0).setOnes();
  design.rightCols(3) = s.x;
  const Eigen::VectorXd beta = Eigen::Map<const Eigen::VectorXd>(fit.coefficients.data(), 4);
  CHECK(logistic_score(design, s.y, beta).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(logistic_log_likelihood(design, s.y, beta) == doctest::Approx(fit.log_likelihood));

  // central second differences of the log-likelihood
  const double h = 1e-4;
  Eigen::MatrixXd hess(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const auto ll = [&](double di, double dj) {
        Eigen::VectorXd b = beta;
        b(i) += di;
        b(j) += dj;
        return logistic_log_likelihood(design, s.y, b);
      };
      hess(i, j) = (ll(h, h) - ll(h, -h) - ll(-h, h) + ll(-h, -h)) / (4 * h * h);
    }
  const Eigen::MatrixXd cov = (-hess).inverse();
  for (int j = 0; j < 4; ++j)
    CHECK(std::abs(std::sqrt(cov(j, j)) - fit.std_errors[j]) / fit.std_errors[j] < 1e-4);
  // the library's information matrix agrees too
  const Eigen::MatrixXd info = logistic_information(design, beta);
  CHECK((info + hess).cwiseAbs().maxCoeff() < 1e-3 * info.cwiseAbs().maxCoeff());
}

TEST_CASE("fit preconditions and failure modes") {
  Rng rng(3);
  SUBCASE("constant column") {
    Eigen::MatrixXd x(20, 2);
    Eigen::VectorXd y(20);
    for (int i = 0; i < 20; ++i) {
      x(i, 0) = rng.normal();
      x(i, 1) = 2.0;
      y(i) = i % 2;
    }
    CHECK_THROWS_AS(fit_logistic(x, y, {"a", "b"}), PreconditionError);
  }
  SUBCASE("too few rows") {
    Eigen::MatrixXd x(2, 2);
    x << 1, 2, 3, 5;
    Eigen::VectorXd y(2);
    y << 1, 0;
    CHECK_THROWS_AS(fit_logistic(x, y, {"a", "b"}), PreconditionError);
  }
  SUBCASE("perfect separation names the predictor") {
    Eigen::MatrixXd x(40, 2);
    Eigen::VectorXd y(40);
    for (int i = 0; i < 40; ++i) {
      x(i, 0) = rng.normal();
      x(i, 1) = (i % 2 ? 1.0 : -1.0) * (0.5 + rng.uniform01());
      y(i) = i % 2;
    }
    try {
      fit_logistic(x, y, {"noise", "sep"});
      FAIL("expected SeparationError");
    } catch (const SeparationError &e) {
      CHECK(e.predictor() == "sep");
    }
    FitOptions o;
    o.allow_separation = true;
    CHECK(fit_logistic(x, y, {"noise", "sep"}, o).separated);
  }
}

TEST_CASE("mirror consistency") {
  Rng rng(8);
  const auto s = simulate(rng, 200, 0.0, {1.0, -0.7});
  Eigen::MatrixXd x(400, 2);
  Eigen::VectorXd y(400);
  x.topRows(200) = s.x;
  x.bottomRows(200) = -s.x;
  y.head(200) = s.y;
  y.tail(200) = Eigen::VectorXd::Ones(200) - s.y;
  FitOptions none;
  none.intercept = false;
  const auto fit = fit_logistic(x, y, {"a", "b"}, none);
  for (int i = 0; i < 200; ++i) {
    const std::vector<double> d{s.x(i, 0), s.x(i, 1)}, m{-s.x(i, 0), -s.x(i, 1)};
    CHECK(std::abs(fit.predict(d) + fit.predict(m) - 1.0) < 1e-9);
  }
  const auto with = fit_logistic(x, y, {"a", "b"});
  CHECK(std::abs(with.coefficients[0]) < 3 * with.std_errors[0]);
}

TEST_CASE("variance inflation factors") {
  const int n = 1000;
  Rng rng(6);
  // exact construction: orthonormalize two columns, then mix them
  Eigen::MatrixXd raw(n, 2);
  for (int i = 0; i < n; ++i) raw.row(i) << rng.normal(), rng.normal();
  for (int j = 0; j < 2; ++j) raw.col(j).array() -= raw.col(j).mean();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, 2);
  Eigen::MatrixXd orth = q;
  auto vif = compute_vif(orth);
  CHECK(std::abs(vif[0] - 1) < 1e-9);
  CHECK(std::abs(vif[1] - 1) < 1e-9);

  Eigen::MatrixXd corr(n, 2);
  corr.col(0) = q.col(0);
  corr.col(1) = 0.6 * q.col(0) + 0.8 * q.col(1);
  vif = compute_vif(corr);
  CHECK(std::abs(vif[0] - 1.5625) < 1e-6);
  CHECK(std::abs(vif[1] - 1.5625) < 1e-6);

  Eigen::MatrixXd dup(n, 3);
  dup.col(0) = raw.col(0);
  dup.col(1) = raw.col(0);
  dup.col(2) = raw.col(1);
  vif = compute_vif(dup);
  CHECK(std::isinf(vif[0]));
  CHECK(std::isinf(vif[1]));
  CHECK(std::isfinite(vif[2]));

  Eigen::MatrixXd one(n, 1);
  one.col(0) = raw.col(0);
  CHECK_THROWS_AS(compute_vif(one), PreconditionError);

  for (int t = 0; t < 20; ++t) {
    Eigen::MatrixXd m(50, 3);
    for (int i = 0; i < 50; ++i) m.row(i) << rng.normal(), rng.normal(), rng.normal();
    m.col(2) += 0.5 * m.col(0);
    for (double v : compute_vif(m)) CHECK(v >= 1.0 - 1e-9);
  }
}

TEST_CASE("likelihood ratio tests") {
  CHECK(std::abs(chi_square_upper_tail(3.841, 1) - 0.05) < 1e-3);
  for (double x : {0.1, 1.0, 2.5, 3.841, 10.0, 25.0})
    CHECK(chi_square_upper_tail(x, 1) == doctest::Approx(std::erfc(std::sqrt(x / 2))).epsilon(1e-12));
  // df = 2 has the closed form exp(-x/2)
  CHECK(chi_square_upper_tail(4.0, 2) == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));

  Rng rng(12);
  const auto s = simulate(rng, 500, 0.0, {1.0, 0.5});
  const auto full = fit_logistic(s.x, s.y, {"a", "b"});
  const auto same = likelihood_ratio_test(full, full);
  CHECK(same.chi_square == 0);
  CHECK(same.df == 0);
  CHECK(same.p_value == 1);
  const auto reduced = fit_logistic(s.x.leftCols(1), s.y, {"a"});
  const auto t = likelihood_ratio_test(full, reduced);
  CHECK(t.df == 1);
  CHECK(t.chi_square == doctest::Approx(2 * (full.log_likelihood - reduced.log_likelihood)));
  CHECK(t.p_value < 0.01);
  CHECK_THROWS_AS(likelihood_ratio_test(reduced, full), UsageError);
  auto other_y = s.y;
  other_y(0) = 1 - other_y(0);
  const auto other = fit_logistic(s.x.leftCols(1), other_y, {"a"});
  CHECK_THROWS_AS(likelihood_ratio_test(full, other), UsageError);
  const auto renamed = fit_logistic(s.x.leftCols(1), s.y, {"z"});
  CHECK_THROWS_AS(likelihood_ratio_test(full, renamed), UsageError);
}

TEST_CASE("likelihood ratio p-values are uniform under the null") {
  Rng rng(2024);
  std::vector<double> ps;
  for (int r = 0; r < 1000; ++r) {
    const auto s = simulate(rng, 150, 0.2, {0.8, 0.0});
    const auto full = fit_logistic(s.x, s.y, {"a", "noise"});
    const auto reduced = fit_logistic(s.x.leftCols(1), s.y, {"a"});
    ps.push_back(likelihood_ratio_test(full, reduced).p_value);
  }
  std::sort(ps.begin(), ps.end());
  double d = 0;
  const double n = static_cast<double>(ps.size());
  for (std::size_t i = 0; i < ps.size(); ++i)
    d = std::max({d, (static_cast<double>(i) + 1) / n - ps[i], ps[i] - static_cast<double>(i) / n});
  CHECK(kolmogorov_tail(std::sqrt(n) * d) > 0.01);
}

TEST_CASE("McNemar exact test") {
  for (unsigned b = 0; b <= 30; ++b)
    for (unsigned c = 0; c <= 30; ++c) {
      CHECK(std::abs(mcnemar_exact_p(b, c) - mcnemar_oracle(b, c)) < 1e-12);
      CHECK(mcnemar_exact_p(b, c) == mcnemar_exact_p(c, b));
    }
  CHECK(mcnemar_exact_p(10, 2) == doctest::Approx(2.0 * 79 / 4096).epsilon(1e-12));
  CHECK(std::abs(mcnemar_exact_p(10, 2) - 0.0386) < 1e-4);
  CHECK(mcnemar_exact_p(5, 5) == 1.0);
  CHECK(mcnemar_exact_p(0, 0) == 1.0);

  const std::vector<bool> a{true, true, false, true, false}, b{false, true, true, false, false};
  const auto r = mcnemar_test(a, b);
  CHECK(r.b == 2);
  CHECK(r.c == 1);
  CHECK(r.p_value == mcnemar_exact_p(2, 1));
  CHECK(mcnemar_test(b, a).p_value == r.p_value);
  const std::vector<bool> shorter{true};
  CHECK_THROWS_AS(mcnemar_test(a, shorter), UsageError);
}

TEST_CASE("binomial interval") {
  const auto [lo0, hi0] = binomial_interval(0, 20, 0.99);
  CHECK(lo0 == 0.0);
  CHECK(hi0 == doctest::Approx(1 - std::pow(0.005, 1.0 / 20)).epsilon(1e-10));
  const auto [lo, hi] = binomial_interval(50, 100, 0.99);
  CHECK(lo < 0.5);
  CHECK(hi > 0.5);
  CHECK(lo == doctest::Approx(1 - hi).epsilon(1e-10));
}

TEST_CASE("cross-validation") {
  Rng rng(31);
  SUBCASE("determinism, grouping and coverage") {
    const auto s = simulate(rng, 300, 0.0, {1.2, -0.4});
    const auto inst = instances_from(s);
    const auto sel = all_predictors(kTwo);
    CvOptions o;
    o.seed = 5;
    const auto a = kfold_cv(inst, sel, o);
    const auto b = kfold_cv(inst, sel, o);
    CHECK(a.fold == b.fold);
    CHECK(a.probability == b.probability);
    CHECK(a.accuracy_percent == b.accuracy_percent);
    REQUIRE(a.fold.size() == inst.size());
    REQUIRE(a.predicted.size() == inst.size());
    std::map<std::string, std::set<std::size_t>> folds_of_ref;
    std::map<std::size_t, std::set<std::string>> refs_in_fold;
    for (std::size_t i = 0; i < inst.size(); ++i) {
      folds_of_ref[inst[i].ref_id].insert(a.fold[i]);
      refs_in_fold[a.fold[i]].insert(inst[i].ref_id);
      CHECK(a.predicted[i] == (a.probability[i] >= 0.5 ? 1 : 0));
      CHECK(a.correct[i] == (a.predicted[i] == inst[i].label));
    }
    for (const auto &[ref, folds] : folds_of_ref) CHECK(folds.size() == 1);
    CHECK(refs_in_fold.size() == 10);
    std::size_t lo = SIZE_MAX, hi = 0;
    for (const auto &[f, refs] : refs_in_fold) {
      lo = std::min(lo, refs.size());
      hi = std::max(hi, refs.size());
    }
    CHECK(hi - lo <= 1);
    o.seed = 6;
    CHECK(kfold_cv(inst, sel, o).fold != a.fold);

    // subset accuracies recombine to the overall accuracy
    double weighted = 0;
    std::size_t total = 0;
    for (const auto &sa : a.subsets) {
      if (sa.subset == Subset::kDosv || sa.subset == Subset::kIosv || sa.subset == Subset::kCanonical ||
          sa.subset == Subset::kOther) {
        weighted += static_cast<double>(sa.correct);
        total += sa.total;
      }
    }
    CHECK(total == inst.size());
    CHECK(100.0 * weighted / static_cast<double>(total) == doctest::Approx(a.accuracy_percent));
  }
  SUBCASE("an informative feature classifies perfectly") {
    Sim s{Eigen::MatrixXd(200, 1), Eigen::VectorXd(200)};
    for (int i = 0; i < 200; ++i) {
      s.y(i) = i % 2;
      s.x(i, 0) = (i % 2 ? 1 : -1) * (0.5 + rng.uniform01());
    }
    const std::vector<Predictor> one{Predictor::kDependencyLength};
    const auto r = kfold_cv(instances_from(s), all_predictors(one));
    CHECK(r.accuracy_percent == 100.0);
    CHECK_FALSE(r.separated_folds.empty());
  }
  SUBCASE("a random feature is at chance") {
    Sim s{Eigen::MatrixXd(1000, 1), Eigen::VectorXd(1000)};
    for (int i = 0; i < 1000; ++i) {
      s.y(i) = i % 2;
      s.x(i, 0) = rng.normal();
    }
    const std::vector<Predictor> one{Predictor::kDependencyLength};
    const auto r = kfold_cv(instances_from(s), all_predictors(one));
    std::size_t correct = 0;
    for (bool c : r.correct) correct += c;
    const auto [lo, hi] = binomial_interval(correct, 1000, 0.99);
    CHECK(lo < 0.5);
    CHECK(hi > 0.5);
  }
  SUBCASE("subset accuracy of an all-correct vector") {
    const auto s = simulate(rng, 40, 0.0, {1.0});
    const auto inst = instances_from(s);
    const std::vector<bool> all(inst.size(), true);
    for (const auto &sa : accuracy_by_subset(all, inst)) {
      if (sa.total) CHECK(sa.percent == 100.0);
      else CHECK_FALSE(sa.percent.has_value());
    }
  }
  SUBCASE("usage errors") {
    const auto s = simulate(rng, 30, 0.0, {1.0, 1.0});
    const auto inst = instances_from(s);
    CvOptions o;
    o.k = 1;
    CHECK_THROWS_AS(kfold_cv(inst, all_predictors(kTwo), o), Error);
    const std::vector<Predictor> wanted{Predictor::kPcfgSurprisal};
    CHECK_THROWS_AS(select_predictors(kTwo, wanted), UsageError);
  }
}

TEST_CASE("fit reports") {
  Rng rng(17);
  const auto s = simulate(rng, 400, 0.1, {1.0, -1.0});
  const auto inst = instances_from(s);
  const auto fit = fit_logistic(inst, all_predictors(kTwo));
  std::ostringstream out;
  const std::vector<std::string> header{"artifact: test"};
  write_fit_table(out, fit, header);
  const std::string text = out.str();
  CHECK(text.rfind("# artifact: test", 0) == 0);
  for (const char *col : {"Predictor", "Estimate", "Std. Error", "Z-value", "VIF"})
    CHECK(text.find(col) != std::string::npos);
  CHECK(text.find("Dependency length") != std::string::npos);
  CHECK(text.find("(Intercept)") != std::string::npos);

  const auto j = nlohmann::json::parse(fit_to_json(fit));
  CHECK(j["schema"] == 1);
  CHECK(j["predictors"].size() == 3);
  CHECK(j["n"] == 400);

  const auto cv = kfold_cv(inst, all_predictors(kTwo));
  std::ostringstream pred;
  write_cv_predictions(pred, cv, inst, header);
  std::size_t rows = 0;
  std::istringstream lines(pred.str());
  for (std::string l; std::getline(lines, l);)
    if (!l.empty() && l[0] != '#') ++rows;
  CHECK(rows == inst.size() + 1);
  const auto cj = nlohmann::json::parse(cv_to_json(cv, inst));
  CHECK(cj["k"] == 10);
  CHECK(cj["accuracy"].get<double>() == doctest::Approx(cv.accuracy_percent));
}
