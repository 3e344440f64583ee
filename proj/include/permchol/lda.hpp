#pragma once

// Linear discriminant analysis with a plug-in precision matrix estimate.
// Class labels are 0-based indices in [0, K).

#include <cstdint>
#include <span>
#include <vector>

#include "permchol/ensemble.hpp"
#include "permchol/mcd.hpp"

namespace permchol {

struct EstimatorSpec {
  Method method = Method::kM2;
  int M = 100;
  std::uint64_t seed = 0;
  EnsembleOptions options;
};

struct LdaModel {
  std::vector<Vector> means;   // per class, length m
  std::vector<double> priors;  // class frequencies in the training set
  PrecisionEstimate precision;
  std::vector<Index> selected;  // retained columns of the original data
  Index input_dim = 0;          // column count of the training data

  int classes() const noexcept { return static_cast<int>(means.size()); }
};

/// (1/(n-K)) sum_k sum_{i in k} (x_i - mu_k)(x_i - mu_k)'. Throws
/// ArgumentError when n <= K, a label is out of range, or a class is empty.
Matrix pooled_within_covariance(const Matrix& X, std::span<const int> labels,
                                int classes);

/// Rows minus their class mean.
Matrix within_class_residuals(const Matrix& X, std::span<const int> labels,
                              int classes);

/// Indices of the top_m variables by |Welch t| between classes 0 and 1,
/// largest first, ties to the lower index. Throws ArgumentError unless both
/// classes have >= 2 observations and top_m <= p.
std::vector<Index> t_test_screen(const Matrix& X, std::span<const int> labels,
                                 Index top_m);

/// Welch two-sample t statistic of every column (class 0 minus class 1).
Vector welch_t_statistics(const Matrix& X, std::span<const int> labels);

/// Trains on the columns in `selected` (all columns when empty). The
/// precision matrix is estimated from the pooled within-class residuals;
/// SAMPLE and DIAGONAL use the pooled within-class covariance directly.
/// Throws SingularEstimateError for SAMPLE when that covariance is singular.
LdaModel lda_train(const Matrix& X, std::span<const int> labels, int classes,
                   const EstimatorSpec& estimator,
                   std::vector<Index> selected = {});

/// Discriminant scores x' W mu_k - mu_k' W mu_k / 2 + log pi_k for a vector
/// already restricted to the selected variables.
Vector lda_scores(const LdaModel& model, const Vector& x);

/// argmax of lda_scores, ties to the lowest class index.
int lda_predict(const LdaModel& model, const Vector& x);

struct ClassificationResult {
  Index error_count = 0;
  double error_rate = 0.0;
  Eigen::MatrixXi confusion;  // rows: true class, cols: predicted class
  std::vector<int> predictions;
};

/// X_test has either the model's input width (projected onto the selected
/// variables) or exactly the selected width.
ClassificationResult misclassification_error(const LdaModel& model,
                                             const Matrix& X_test,
                                             std::span<const int> labels);

}  // namespace permchol
