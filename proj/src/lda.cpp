#include "permchol/lda.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "permchol/baselines.hpp"
#include "permchol/errors.hpp"

namespace permchol {

namespace {

void check_labels(const Matrix& X, std::span<const int> labels, int classes) {
  if (static_cast<Index>(labels.size()) != X.rows()) {
    throw ArgumentError("label count does not match the number of rows");
  }
  if (classes < 1) throw ArgumentError("need at least one class");
  for (int label : labels) {
    if (label < 0 || label >= classes) {
      throw ArgumentError("label " + std::to_string(label) + " out of range");
    }
  }
}

std::vector<Index> class_sizes(std::span<const int> labels, int classes) {
  std::vector<Index> sizes(static_cast<std::size_t>(classes), 0);
  for (int label : labels) ++sizes[static_cast<std::size_t>(label)];
  return sizes;
}

std::vector<Vector> class_means(const Matrix& X, std::span<const int> labels,
                                int classes) {
  const auto sizes = class_sizes(labels, classes);
  std::vector<Vector> means(static_cast<std::size_t>(classes),
                            Vector::Zero(X.cols()));
  for (Index i = 0; i < X.rows(); ++i) {
    means[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])] +=
        X.row(i).transpose();
  }
  for (std::size_t k = 0; k < means.size(); ++k) {
    if (sizes[k] == 0) {
      throw ArgumentError("class " + std::to_string(k) + " has no observations");
    }
    means[k] /= static_cast<double>(sizes[k]);
  }
  return means;
}

}  // namespace

Matrix within_class_residuals(const Matrix& X, std::span<const int> labels,
                              int classes) {
  check_labels(X, labels, classes);
  const auto means = class_means(X, labels, classes);
  Matrix R = X;
  for (Index i = 0; i < X.rows(); ++i) {
    R.row(i) -=
        means[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])]
            .transpose();
  }
  return R;
}

Matrix pooled_within_covariance(const Matrix& X, std::span<const int> labels,
                                int classes) {
  check_labels(X, labels, classes);
  if (X.rows() <= classes) {
    throw ArgumentError("pooled covariance needs more observations than classes");
  }
  const Matrix R = within_class_residuals(X, labels, classes);
  Matrix S = R.transpose() * R / static_cast<double>(X.rows() - classes);
  return 0.5 * (S + S.transpose());
}

Vector welch_t_statistics(const Matrix& X, std::span<const int> labels) {
  check_labels(X, labels, 2);
  const auto sizes = class_sizes(labels, 2);
  if (sizes[0] < 2 || sizes[1] < 2) {
    throw ArgumentError("t-test screening needs at least 2 observations per class");
  }
  const auto means = class_means(X, labels, 2);
  Vector ss0 = Vector::Zero(X.cols());
  Vector ss1 = Vector::Zero(X.cols());
  for (Index i = 0; i < X.rows(); ++i) {
    const int k = labels[static_cast<std::size_t>(i)];
    const Vector d = X.row(i).transpose() - means[static_cast<std::size_t>(k)];
    (k == 0 ? ss0 : ss1) += d.cwiseProduct(d);
  }
  const double n0 = static_cast<double>(sizes[0]);
  const double n1 = static_cast<double>(sizes[1]);
  Vector t(X.cols());
  for (Index j = 0; j < X.cols(); ++j) {
    const double diff = means[0](j) - means[1](j);
    const double se =
        std::sqrt(ss0(j) / (n0 - 1.0) / n0 + ss1(j) / (n1 - 1.0) / n1);
    if (se > 0.0) {
      t(j) = diff / se;
    } else {
      t(j) = diff == 0.0 ? 0.0 : std::copysign(
                                       std::numeric_limits<double>::infinity(),
                                       diff);
    }
  }
  return t;
}

std::vector<Index> t_test_screen(const Matrix& X, std::span<const int> labels,
                                 Index top_m) {
  if (top_m < 0 || top_m > X.cols()) {
    throw ArgumentError("cannot select " + std::to_string(top_m) + " of " +
                        std::to_string(X.cols()) + " variables");
  }
  const Vector t = welch_t_statistics(X, labels);
  std::vector<Index> order(static_cast<std::size_t>(X.cols()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return std::abs(t(a)) > std::abs(t(b));
  });
  order.resize(static_cast<std::size_t>(top_m));
  return order;
}

LdaModel lda_train(const Matrix& X, std::span<const int> labels, int classes,
                   const EstimatorSpec& estimator, std::vector<Index> selected) {
  check_labels(X, labels, classes);
  if (selected.empty()) {
    selected.resize(static_cast<std::size_t>(X.cols()));
    std::iota(selected.begin(), selected.end(), Index{0});
  }
  for (Index j : selected) {
    if (j < 0 || j >= X.cols()) throw ArgumentError("selected index out of range");
  }
  const Matrix Xs = X(Eigen::all, selected);
  const auto sizes = class_sizes(labels, classes);
  auto means = class_means(Xs, labels, classes);

  std::vector<double> priors;
  for (Index size : sizes) {
    priors.push_back(static_cast<double>(size) / static_cast<double>(X.rows()));
  }

  const Matrix R = within_class_residuals(Xs, labels, classes);
  const auto build = [&]() -> PrecisionEstimate {
    switch (estimator.method) {
      case Method::kM1:
        return estimate_m1(R, estimator.M, estimator.seed, estimator.options);
      case Method::kM2:
        return estimate_m2(R, estimator.M, estimator.seed, estimator.options);
      case Method::kAve:
        return estimate_ave(R, estimator.M, estimator.seed, estimator.options);
      case Method::kBicOrder:
        return estimate_bic_order(R, estimator.seed, estimator.options.cv);
      case Method::kDiagonal:
        return diagonal_precision(pooled_within_covariance(Xs, labels, classes));
      case Method::kSample:
        return sample_precision(pooled_within_covariance(Xs, labels, classes));
      case Method::kSingleOrder:
        break;
    }
    throw ArgumentError("unsupported LDA estimator");
  };

  return LdaModel{std::move(means), std::move(priors), build(),
                  std::move(selected), X.cols()};
}

Vector lda_scores(const LdaModel& model, const Vector& x) {
  const Matrix& omega = model.precision.omega();
  if (x.size() != omega.rows()) {
    throw ArgumentError("observation has " + std::to_string(x.size()) +
                        " values, model expects " +
                        std::to_string(omega.rows()));
  }
  Vector scores(model.classes());
  for (int k = 0; k < model.classes(); ++k) {
    const Vector& mu = model.means[static_cast<std::size_t>(k)];
    const Vector w = omega * mu;
    scores(k) = x.dot(w) - 0.5 * mu.dot(w) +
                std::log(model.priors[static_cast<std::size_t>(k)]);
  }
  return scores;
}

int lda_predict(const LdaModel& model, const Vector& x) {
  const Vector scores = lda_scores(model, x);
  int best = 0;
  for (int k = 1; k < scores.size(); ++k) {
    if (scores(k) > scores(best)) best = k;
  }
  return best;
}

ClassificationResult misclassification_error(const LdaModel& model,
                                             const Matrix& X_test,
                                             std::span<const int> labels) {
  if (static_cast<Index>(labels.size()) != X_test.rows()) {
    throw ArgumentError("label count does not match the test rows");
  }
  const auto m = static_cast<Index>(model.selected.size());
  Matrix Xs;
  if (X_test.cols() == model.input_dim) {
    Xs = X_test(Eigen::all, model.selected);
  } else if (X_test.cols() == m) {
    Xs = X_test;
  } else {
    throw ArgumentError("test data width does not match the model");
  }

  const int K = model.classes();
  ClassificationResult result;
  result.confusion = Eigen::MatrixXi::Zero(K, K);
  for (Index i = 0; i < Xs.rows(); ++i) {
    const int truth = labels[static_cast<std::size_t>(i)];
    if (truth < 0 || truth >= K) throw ArgumentError("test label out of range");
    const int predicted = lda_predict(model, Xs.row(i).transpose());
    result.predictions.push_back(predicted);
    ++result.confusion(truth, predicted);
    if (predicted != truth) ++result.error_count;
  }
  result.error_rate = Xs.rows() > 0 ? static_cast<double>(result.error_count) /
                                          static_cast<double>(Xs.rows())
                                    : 0.0;
  return result;
}

}  // namespace permchol
