// Logistic regression by IRLS, collinearity diagnostics, nested model tests,
// grouped k-fold cross-validation and McNemar's exact test.

#ifndef WORDORDER_STATS_H_
#define WORDORDER_STATS_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "wordorder/pairrank.h"

namespace wordorder {

// Which delta columns enter a model, with their display names.
struct PredictorSelection {
  std::vector<std::size_t> columns;
  std::vector<std::string> names;
};

// Selects `wanted` out of the columns laid out as `available`. Throws
// UsageError when a wanted predictor is not available.
PredictorSelection select_predictors(std::span<const Predictor> available,
                                     std::span<const Predictor> wanted);
PredictorSelection all_predictors(std::span<const Predictor> available);

struct FitOptions {
  bool intercept = true;
  int max_iterations = 100;
  double score_tolerance = 1e-8;
  double loglik_tolerance = 1e-10;
  double separation_bound = 50.0;
  // Return a flagged fit instead of throwing SeparationError.
  bool allow_separation = false;
};

struct RegressionFit {
  std::vector<std::string> names;  // "(Intercept)" first when fitted
  std::vector<double> coefficients;
  std::vector<double> std_errors;
  std::vector<double> z_values;
  std::vector<double> p_values;
  std::vector<double> vif;  // one per predictor, intercept excluded; +inf when collinear
  double log_likelihood = 0.0;
  std::size_t n = 0;
  int iterations = 0;
  bool intercept = true;
  bool separated = false;
  std::uint64_t data_fingerprint = 0;  // labels and row count
  std::vector<std::size_t> columns;    // delta columns, for prediction

  // P(label = 1) for a full-width delta vector.
  double predict(std::span<const double> delta) const;
  std::size_t predictor_count() const { return columns.size(); }
};

// Observation matrix `x` excludes the intercept column.
RegressionFit fit_logistic(const Eigen::MatrixXd &x, const Eigen::VectorXd &y,
                           std::vector<std::string> names, const FitOptions &options = {});
RegressionFit fit_logistic(std::span<const PairInstance> instances,
                           const PredictorSelection &predictors, const FitOptions &options = {});

// Log-likelihood score vector and observed information at `beta`, for a
// design that already contains any intercept column.
Eigen::VectorXd logistic_score(const Eigen::MatrixXd &design, const Eigen::VectorXd &y,
                               const Eigen::VectorXd &beta);
Eigen::MatrixXd logistic_information(const Eigen::MatrixXd &design, const Eigen::VectorXd &beta);
double logistic_log_likelihood(const Eigen::MatrixXd &design, const Eigen::VectorXd &y,
                               const Eigen::VectorXd &beta);

// Requires at least two columns. Collinear columns yield +infinity.
std::vector<double> compute_vif(const Eigen::MatrixXd &x);
std::vector<double> compute_vif(std::span<const PairInstance> instances,
                                const PredictorSelection &predictors);

struct LikelihoodRatioTest {
  double chi_square = 0.0;
  int df = 0;
  double p_value = 1.0;
};

// Throws UsageError unless `reduced` is nested in `full` on the same data.
LikelihoodRatioTest likelihood_ratio_test(const RegressionFit &full, const RegressionFit &reduced);
double chi_square_upper_tail(double x, int df);

struct CvOptions {
  std::size_t k = 10;
  std::uint64_t seed = 1;
  FitOptions fit;
  int max_reshuffles = 100;
};

struct SubsetAccuracy {
  Subset subset = Subset::kOverall;
  std::size_t correct = 0;
  std::size_t total = 0;
  std::optional<double> percent;  // absent for an empty subset
};

struct CvReport {
  std::size_t k = 0;
  std::uint64_t seed = 0;       // seed actually used after reshuffles
  int reshuffles = 0;
  std::vector<std::size_t> fold;  // per instance
  std::vector<double> probability;
  std::vector<int> predicted;
  std::vector<bool> correct;
  std::vector<std::size_t> separated_folds;
  std::vector<std::string> names;
  double accuracy_percent = 0.0;
  std::vector<SubsetAccuracy> subsets;
};

// Instances are grouped by reference id so that all pairs of one reference
// share a fold. Each training fold is z-scored and its statistics applied to
// the held-out fold. Raw (unnormalized) instances are expected.
CvReport kfold_cv(std::span<const PairInstance> instances, const PredictorSelection &predictors,
                  const CvOptions &options = {});

std::vector<SubsetAccuracy> accuracy_by_subset(const std::vector<bool> &correct,
                                               std::span<const PairInstance> instances);
std::vector<SubsetAccuracy> accuracy_by_subset(const CvReport &report,
                                               std::span<const PairInstance> instances);

struct McNemarResult {
  std::size_t b = 0;  // A correct, B wrong
  std::size_t c = 0;  // A wrong, B correct
  double p_value = 1.0;
};

McNemarResult mcnemar_test(const std::vector<bool> &a, const std::vector<bool> &b);
double mcnemar_exact_p(std::size_t b, std::size_t c);

// Two-sided Clopper-Pearson interval for a binomial proportion.
std::pair<double, double> binomial_interval(std::size_t successes, std::size_t trials,
                                            double confidence);

// Reports.
void write_fit_table(std::ostream &out, const RegressionFit &fit,
                     std::span<const std::string> header_lines = {});
std::string fit_to_json(const RegressionFit &fit);
void write_cv_predictions(std::ostream &out, const CvReport &report,
                          std::span<const PairInstance> instances,
                          std::span<const std::string> header_lines = {});
std::string cv_to_json(const CvReport &report, std::span<const PairInstance> instances);

}  // namespace wordorder

#endif  // WORDORDER_STATS_H_
