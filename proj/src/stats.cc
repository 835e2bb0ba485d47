#include "wordorder/stats.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include "json.hpp"

#include "text_util.h"
#include "wordorder/errors.h"
#include "wordorder/random.h"

namespace wordorder {

using Eigen::MatrixXd;
using Eigen::VectorXd;

PredictorSelection select_predictors(std::span<const Predictor> available,
                                     std::span<const Predictor> wanted) {
  PredictorSelection sel;
  for (Predictor p : wanted) {
    const auto it = std::find(available.begin(), available.end(), p);
    if (it == available.end())
      throw UsageError("predictor '" + std::string(to_string(p)) + "' is not in the instance table");
    sel.columns.push_back(static_cast<std::size_t>(it - available.begin()));
    sel.names.emplace_back(display_name(p));
  }
  return sel;
}

PredictorSelection all_predictors(std::span<const Predictor> available) {
  return select_predictors(available, available);
}

double RegressionFit::predict(std::span<const double> delta) const {
  double eta = 0;
  std::size_t j = 0;
  if (intercept) eta += coefficients[j++];
  for (std::size_t c : columns) eta += coefficients[j++] * delta[c];
  return 1.0 / (1.0 + std::exp(-eta));
}

namespace {

// log(1 + exp(x)) without overflow.
double log1pexp(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

VectorXd sigmoid(const VectorXd &eta) {
  return eta.unaryExpr([](double e) { return 1.0 / (1.0 + std::exp(-e)); });
}

std::uint64_t label_fingerprint(const VectorXd &y) {
  std::string bytes = std::to_string(y.size()) + ":";
  for (Eigen::Index i = 0; i < y.size(); ++i) bytes.push_back(y[i] > 0.5 ? '1' : '0');
  return fnv1a64(bytes);
}

double two_sided_normal_p(double z) {
  if (std::isnan(z)) return std::numeric_limits<double>::quiet_NaN();
  return std::erfc(std::abs(z) / std::sqrt(2.0));
}

bool solve_spd(const MatrixXd &h, const VectorXd &rhs, VectorXd &out) {
  Eigen::LDLT<MatrixXd> ldlt(h);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return false;
  out = ldlt.solve(rhs);
  return out.allFinite();
}

}  // namespace

double logistic_log_likelihood(const MatrixXd &design, const VectorXd &y, const VectorXd &beta) {
  const VectorXd eta = design * beta;
  double ll = 0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) ll += y[i] * eta[i] - log1pexp(eta[i]);
  return ll;
}

VectorXd logistic_score(const MatrixXd &design, const VectorXd &y, const VectorXd &beta) {
  return design.transpose() * (y - sigmoid(design * beta));
}

MatrixXd logistic_information(const MatrixXd &design, const VectorXd &beta) {
  const VectorXd p = sigmoid(design * beta);
  const VectorXd w = p.array() * (1.0 - p.array());
  return design.transpose() * w.asDiagonal() * design;
}

RegressionFit fit_logistic(const MatrixXd &x, const VectorXd &y, std::vector<std::string> names,
                           const FitOptions &options) {
  const Eigen::Index n = x.rows();
  const Eigen::Index k = x.cols();
  if (static_cast<std::size_t>(k) != names.size())
    throw PreconditionError("predictor names do not match design columns");
  if (y.size() != n) throw PreconditionError("label vector length does not match design rows");
  const Eigen::Index width = k + (options.intercept ? 1 : 0);
  if (n <= width)
    throw PreconditionError("need more instances (" + std::to_string(n) + ") than parameters (" +
                            std::to_string(width) + ")");
  for (Eigen::Index i = 0; i < n; ++i)
    if (y[i] != 0.0 && y[i] != 1.0) throw PreconditionError("labels must be 0 or 1");
  for (Eigen::Index j = 0; j < k; ++j) {
    const double lo = x.col(j).minCoeff();
    const double hi = x.col(j).maxCoeff();
    if (!(hi - lo > 1e-12 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)))))
      throw PreconditionError("predictor '" + names[static_cast<std::size_t>(j)] + "' is constant");
  }

  MatrixXd design(n, width);
  if (options.intercept) {
    design.col(0).setOnes();
    design.rightCols(k) = x;
  } else {
    design = x;
  }

  RegressionFit fit;
  fit.n = static_cast<std::size_t>(n);
  fit.intercept = options.intercept;
  if (options.intercept) fit.names.emplace_back("(Intercept)");
  for (auto &name : names) fit.names.push_back(std::move(name));
  fit.data_fingerprint = label_fingerprint(y);

  VectorXd beta = VectorXd::Zero(width);
  double ll = logistic_log_likelihood(design, y, beta);
  const auto offender = [&]() {
    Eigen::Index start = options.intercept && k > 0 ? 1 : 0;
    Eigen::Index best = start;
    for (Eigen::Index j = start; j < width; ++j)
      if (std::abs(beta[j]) > std::abs(beta[best])) best = j;
    return fit.names[static_cast<std::size_t>(best)];
  };
  const auto diverged = [&] { return beta.cwiseAbs().maxCoeff() > options.separation_bound; };

  bool converged = false;
  bool polish = false;
  int iter = 0;
  while (!converged) {
    const VectorXd score = logistic_score(design, y, beta);
    VectorXd step;
    if (!solve_spd(logistic_information(design, beta), score, step)) {
      fit.separated = true;
      break;
    }
    // A vanishing score alone is not enough: under separation the score
    // decays while the Newton step stays large.
    if (score.cwiseAbs().maxCoeff() < options.score_tolerance &&
        step.cwiseAbs().maxCoeff() < 1e-6 * (1.0 + beta.cwiseAbs().maxCoeff()))
      break;
    if (iter >= options.max_iterations) {
      if (diverged()) break;
      throw IterationLimitError("IRLS did not converge within " + std::to_string(options.max_iterations) +
                                " iterations");
    }
    ++iter;
    // Step halving keeps the likelihood non-decreasing.
    double ll_new = logistic_log_likelihood(design, y, beta + step);
    for (int h = 0; h < 30 && !(ll_new >= ll); ++h) {
      step *= 0.5;
      ll_new = logistic_log_likelihood(design, y, beta + step);
    }
    beta += step;
    const double rel = std::abs(ll_new - ll) / std::max(std::abs(ll), 1e-300);
    ll = ll_new;
    if (diverged()) {
      fit.separated = true;
      break;
    }
    if (polish) converged = true;
    else if (rel < options.loglik_tolerance) polish = true;  // one more Newton step
  }
  if (diverged()) fit.separated = true;
  if (fit.separated && !options.allow_separation)
    throw SeparationError(offender(), "perfect separation: coefficient of '" + offender() +
                                          "' diverges");

  fit.iterations = iter;
  fit.log_likelihood = ll;
  fit.coefficients.assign(beta.data(), beta.data() + width);
  const MatrixXd info = logistic_information(design, beta);
  Eigen::LDLT<MatrixXd> ldlt(info);
  MatrixXd cov = MatrixXd::Constant(width, width, std::numeric_limits<double>::quiet_NaN());
  if (ldlt.info() == Eigen::Success && ldlt.isPositive()) cov = ldlt.solve(MatrixXd::Identity(width, width));
  for (Eigen::Index j = 0; j < width; ++j) {
    const double var = cov(j, j);
    const double se = var > 0 ? std::sqrt(var) : std::numeric_limits<double>::quiet_NaN();
    fit.std_errors.push_back(se);
    fit.z_values.push_back(beta[j] / se);
    fit.p_values.push_back(two_sided_normal_p(beta[j] / se));
  }
  if (k >= 2) fit.vif = compute_vif(x);
  else if (k == 1) fit.vif = {1.0};
  return fit;
}

namespace {

MatrixXd design_of(std::span<const PairInstance> instances, const PredictorSelection &sel) {
  MatrixXd x(static_cast<Eigen::Index>(instances.size()), static_cast<Eigen::Index>(sel.columns.size()));
  for (std::size_t i = 0; i < instances.size(); ++i)
    for (std::size_t j = 0; j < sel.columns.size(); ++j)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = instances[i].delta.at(sel.columns[j]);
  return x;
}

VectorXd labels_of(std::span<const PairInstance> instances) {
  VectorXd y(static_cast<Eigen::Index>(instances.size()));
  for (std::size_t i = 0; i < instances.size(); ++i) y[static_cast<Eigen::Index>(i)] = instances[i].label;
  return y;
}

}  // namespace

RegressionFit fit_logistic(std::span<const PairInstance> instances, const PredictorSelection &predictors,
                           const FitOptions &options) {
  if (predictors.names.size() != predictors.columns.size())
    throw PreconditionError("predictor selection names and columns differ in length");
  RegressionFit fit = fit_logistic(design_of(instances, predictors), labels_of(instances),
                                   predictors.names, options);
  fit.columns = predictors.columns;
  return fit;
}

std::vector<double> compute_vif(const MatrixXd &x) {
  const Eigen::Index n = x.rows();
  const Eigen::Index k = x.cols();
  if (k < 2) throw PreconditionError("VIF needs at least two predictors");
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> vif;
  for (Eigen::Index j = 0; j < k; ++j) {
    const VectorXd target = x.col(j);
    const double mean = target.mean();
    const double tss = (target.array() - mean).square().sum();
    if (!(tss > 1e-24 * std::max(1.0, mean * mean) * static_cast<double>(n))) {
      vif.push_back(inf);
      continue;
    }
    MatrixXd others(n, k);
    others.col(0).setOnes();
    for (Eigen::Index c = 0, o = 1; c < k; ++c)
      if (c != j) others.col(o++) = x.col(c);
    const VectorXd coef = others.colPivHouseholderQr().solve(target);
    const double rss = (target - others * coef).squaredNorm();
    const double one_minus_r2 = rss / tss;
    vif.push_back(one_minus_r2 < 1e-12 ? inf : std::max(1.0, 1.0 / one_minus_r2));
  }
  return vif;
}

std::vector<double> compute_vif(std::span<const PairInstance> instances, const PredictorSelection &predictors) {
  return compute_vif(design_of(instances, predictors));
}

double chi_square_upper_tail(double x, int df) {
  if (df <= 0) return 1.0;
  if (!(x > 0)) return 1.0;
  return boost::math::gamma_q(df / 2.0, x / 2.0);
}

LikelihoodRatioTest likelihood_ratio_test(const RegressionFit &full, const RegressionFit &reduced) {
  if (full.n != reduced.n || full.data_fingerprint != reduced.data_fingerprint)
    throw UsageError("likelihood-ratio test needs both models fitted on the same instances");
  if (full.intercept != reduced.intercept)
    throw UsageError("likelihood-ratio test needs matching intercept terms");
  for (const std::string &name : reduced.names)
    if (std::find(full.names.begin(), full.names.end(), name) == full.names.end())
      throw UsageError("reduced model predictor '" + name + "' is not in the full model");
  LikelihoodRatioTest t;
  t.df = static_cast<int>(full.names.size()) - static_cast<int>(reduced.names.size());
  t.chi_square = std::max(0.0, 2.0 * (full.log_likelihood - reduced.log_likelihood));
  t.p_value = chi_square_upper_tail(t.chi_square, t.df);
  return t;
}

std::vector<SubsetAccuracy> accuracy_by_subset(const std::vector<bool> &correct,
                                               std::span<const PairInstance> instances) {
  if (correct.size() != instances.size())
    throw UsageError("correctness vector does not match instances");
  std::vector<SubsetAccuracy> out;
  for (Subset s : kAllSubsets) {
    SubsetAccuracy a;
    a.subset = s;
    for (std::size_t i = 0; i < instances.size(); ++i) {
      if (!in_subset(instances[i].construction, s)) continue;
      ++a.total;
      if (correct[i]) ++a.correct;
    }
    if (a.total > 0) a.percent = 100.0 * static_cast<double>(a.correct) / static_cast<double>(a.total);
    out.push_back(a);
  }
  return out;
}

std::vector<SubsetAccuracy> accuracy_by_subset(const CvReport &report, std::span<const PairInstance> instances) {
  return accuracy_by_subset(report.correct, instances);
}

CvReport kfold_cv(std::span<const PairInstance> instances, const PredictorSelection &predictors,
                  const CvOptions &options) {
  if (options.k < 2) throw PreconditionError("k must be at least 2");
  if (instances.size() < options.k) throw PreconditionError("fewer instances than folds");
  std::vector<std::size_t> group_of(instances.size());
  std::map<std::string, std::size_t> group_index;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const auto [it, inserted] = group_index.emplace(instances[i].ref_id, group_index.size());
    group_of[i] = it->second;
  }
  // Group ids follow first appearance, independent of map ordering.
  {
    std::vector<std::size_t> remap(group_index.size(), SIZE_MAX);
    std::size_t next = 0;
    for (std::size_t &g : group_of) {
      if (remap[g] == SIZE_MAX) remap[g] = next++;
      g = remap[g];
    }
  }
  const std::size_t groups = group_index.size();
  if (groups < options.k)
    throw PreconditionError("fewer references (" + std::to_string(groups) + ") than folds (" +
                            std::to_string(options.k) + ")");

  CvReport report;
  report.k = options.k;
  report.names = predictors.names;
  std::vector<std::size_t> fold_of_group(groups);
  const auto constant_labels = [&](bool in_fold, std::size_t f) {
    int seen = -1;
    for (std::size_t i = 0; i < instances.size(); ++i) {
      if ((fold_of_group[group_of[i]] == f) != in_fold) continue;
      if (seen == -1) seen = instances[i].label;
      else if (seen != instances[i].label) return false;
    }
    return true;
  };
  bool ok = false;
  for (int attempt = 0; attempt <= options.max_reshuffles && !ok; ++attempt) {
    report.seed = options.seed + static_cast<std::uint64_t>(attempt);
    report.reshuffles = attempt;
    std::vector<std::size_t> order(groups);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(report.seed);
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t pos = 0; pos < groups; ++pos) fold_of_group[order[pos]] = pos % options.k;
    ok = true;
    for (std::size_t f = 0; f < options.k && ok; ++f)
      if (constant_labels(true, f) || constant_labels(false, f)) ok = false;
  }
  if (!ok) throw StatisticsError("every reshuffle left a fold with a constant label");

  const std::size_t n = instances.size();
  report.fold.resize(n);
  report.probability.assign(n, 0.0);
  report.predicted.assign(n, 0);
  report.correct.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) report.fold[i] = fold_of_group[group_of[i]];

  FitOptions fit_options = options.fit;
  fit_options.allow_separation = true;
  for (std::size_t f = 0; f < options.k; ++f) {
    std::vector<PairInstance> train, test;
    std::vector<std::size_t> test_index;
    for (std::size_t i = 0; i < n; ++i) {
      if (report.fold[i] == f) {
        test.push_back(instances[i]);
        test_index.push_back(i);
      } else {
        train.push_back(instances[i]);
      }
    }
    const NormalizedInstances norm = zscore_normalize(train);
    const RegressionFit fit = fit_logistic(norm.instances, predictors, fit_options);
    if (fit.separated) report.separated_folds.push_back(f);
    const std::vector<PairInstance> test_norm = apply_normalization(test, norm.stats);
    for (std::size_t t = 0; t < test_norm.size(); ++t) {
      const std::size_t i = test_index[t];
      report.probability[i] = fit.predict(test_norm[t].delta);
      report.predicted[i] = report.probability[i] >= 0.5 ? 1 : 0;
      report.correct[i] = report.predicted[i] == instances[i].label;
    }
  }
  const auto hits = static_cast<double>(std::count(report.correct.begin(), report.correct.end(), true));
  report.accuracy_percent = 100.0 * hits / static_cast<double>(n);
  report.subsets = accuracy_by_subset(report.correct, instances);
  return report;
}

double mcnemar_exact_p(std::size_t b, std::size_t c) {
  const std::size_t total = b + c;
  if (total == 0) return 1.0;
  const boost::math::binomial_distribution<double> dist(static_cast<double>(total), 0.5);
  const double tail = boost::math::cdf(dist, static_cast<double>(std::min(b, c)));
  return std::min(1.0, 2.0 * tail);
}

McNemarResult mcnemar_test(const std::vector<bool> &a, const std::vector<bool> &b) {
  if (a.size() != b.size())
    throw UsageError("McNemar test needs aligned predictions (" + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + ")");
  McNemarResult r;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] && !b[i]) ++r.b;
    if (!a[i] && b[i]) ++r.c;
  }
  r.p_value = mcnemar_exact_p(r.b, r.c);
  return r;
}

std::pair<double, double> binomial_interval(std::size_t successes, std::size_t trials, double confidence) {
  if (trials == 0 || successes > trials) throw PreconditionError("invalid binomial counts");
  using boost::math::binomial_distribution;
  const double alpha = (1.0 - confidence) / 2.0;
  const auto t = static_cast<double>(trials);
  const auto s = static_cast<double>(successes);
  return {binomial_distribution<double>::find_lower_bound_on_p(t, s, alpha),
          binomial_distribution<double>::find_upper_bound_on_p(t, s, alpha)};
}

namespace {

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

nlohmann::ordered_json number_or_null(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

}  // namespace

void write_fit_table(std::ostream &out, const RegressionFit &fit, std::span<const std::string> header_lines) {
  for (const std::string &h : header_lines) out << "# " << h << '\n';
  std::size_t width = 12;
  for (const std::string &name : fit.names) width = std::max(width, name.size() + 2);
  out << pad("Predictor", width) << pad("Estimate", 12) << pad("Std. Error", 12) << pad("Z-value", 12)
      << "VIF\n";
  const std::size_t offset = fit.intercept ? 1 : 0;
  for (std::size_t j = 0; j < fit.names.size(); ++j) {
    std::string vif = "--";
    if (j >= offset && j - offset < fit.vif.size()) vif = internal::format_fixed(fit.vif[j - offset], 2);
    out << pad(fit.names[j], width) << pad(internal::format_fixed(fit.coefficients[j], 4), 12)
        << pad(internal::format_fixed(fit.std_errors[j], 4), 12)
        << pad(internal::format_fixed(fit.z_values[j], 2), 12) << vif << '\n';
  }
  out << "\nn = " << fit.n << "; log-likelihood = " << internal::format_fixed(fit.log_likelihood, 4)
      << "; iterations = " << fit.iterations << (fit.separated ? "; SEPARATED" : "") << '\n';
}

std::string fit_to_json(const RegressionFit &fit) {
  nlohmann::ordered_json j;
  j["schema"] = 1;
  j["kind"] = "logistic_fit";
  j["n"] = fit.n;
  j["log_likelihood"] = fit.log_likelihood;
  j["iterations"] = fit.iterations;
  j["separated"] = fit.separated;
  j["predictors"] = nlohmann::ordered_json::array();
  const std::size_t offset = fit.intercept ? 1 : 0;
  for (std::size_t i = 0; i < fit.names.size(); ++i) {
    nlohmann::ordered_json row;
    row["name"] = fit.names[i];
    row["estimate"] = fit.coefficients[i];
    row["std_error"] = number_or_null(fit.std_errors[i]);
    row["z_value"] = number_or_null(fit.z_values[i]);
    row["p_value"] = number_or_null(fit.p_values[i]);
    if (i >= offset && i - offset < fit.vif.size()) {
      const double v = fit.vif[i - offset];
      row["vif"] = number_or_null(v);
      row["collinear"] = std::isinf(v);
    } else {
      row["vif"] = nullptr;
    }
    j["predictors"].push_back(std::move(row));
  }
  return j.dump(2) + "\n";
}

void write_cv_predictions(std::ostream &out, const CvReport &report, std::span<const PairInstance> instances,
                          std::span<const std::string> header_lines) {
  if (instances.size() != report.fold.size()) throw UsageError("report does not match instances");
  for (const std::string &h : header_lines) out << "# " << h << '\n';
  out << "ref_id\tvar_id\tconstruction\tfold\tlabel\tprobability\tpredicted\tcorrect\n";
  for (std::size_t i = 0; i < instances.size(); ++i) {
    out << instances[i].ref_id << '\t' << instances[i].var_id << '\t' << to_string(instances[i].construction)
        << '\t' << report.fold[i] << '\t' << instances[i].label << '\t'
        << internal::format_fixed(report.probability[i], 6) << '\t' << report.predicted[i] << '\t'
        << (report.correct[i] ? 1 : 0) << '\n';
  }
  out << "\n# summary: k = " << report.k << ", seed = " << report.seed << ", reshuffles = " << report.reshuffles
      << ", separated folds = " << report.separated_folds.size() << '\n';
  out << "# model";
  for (const SubsetAccuracy &a : report.subsets) out << '\t' << to_string(a.subset);
  out << "\n# " << internal::join(report.names, "+");
  for (const SubsetAccuracy &a : report.subsets)
    out << '\t' << (a.percent ? internal::format_fixed(*a.percent, 2) : std::string("N/A"));
  out << '\n';
}

std::string cv_to_json(const CvReport &report, std::span<const PairInstance> instances) {
  if (instances.size() != report.fold.size()) throw UsageError("report does not match instances");
  nlohmann::ordered_json j;
  j["schema"] = 1;
  j["kind"] = "cross_validation";
  j["k"] = report.k;
  j["seed"] = report.seed;
  j["reshuffles"] = report.reshuffles;
  j["predictors"] = report.names;
  j["accuracy"] = report.accuracy_percent;
  j["separated_folds"] = report.separated_folds;
  j["subsets"] = nlohmann::ordered_json::array();
  for (const SubsetAccuracy &a : report.subsets) {
    nlohmann::ordered_json row;
    row["subset"] = to_string(a.subset);
    row["correct"] = a.correct;
    row["total"] = a.total;
    row["accuracy"] = a.percent ? nlohmann::ordered_json(*a.percent) : nlohmann::ordered_json(nullptr);
    j["subsets"].push_back(std::move(row));
  }
  j["predictions"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < instances.size(); ++i) {
    nlohmann::ordered_json row;
    row["ref_id"] = instances[i].ref_id;
    row["var_id"] = instances[i].var_id;
    row["fold"] = report.fold[i];
    row["label"] = instances[i].label;
    row["probability"] = report.probability[i];
    row["predicted"] = report.predicted[i];
    row["correct"] = static_cast<bool>(report.correct[i]);
    j["predictions"].push_back(std::move(row));
  }
  return j.dump(2) + "\n";
}

}  // namespace wordorder
