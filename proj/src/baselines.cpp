#include "permchol/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "permchol/errors.hpp"

namespace permchol {

namespace {

constexpr double kOrderRidge = 1e-6;

// Regression BIC of column `target` on `others` from the Gram matrix G.
double regression_bic(const Matrix& G, Index target,
                      const std::vector<Index>& others, Index n) {
  const double nd = static_cast<double>(n);
  double rss = G(target, target);
  Index nonzero = 0;
  if (!others.empty()) {
    Matrix normal = G(others, others);
    const Vector rhs = G(others, target);
    if (static_cast<Index>(others.size()) >= n) {
      normal.diagonal().array() += kOrderRidge;
    }
    const Vector coef = normal.ldlt().solve(rhs);
    const Matrix G_oo = G(others, others);
    rss += -2.0 * coef.dot(rhs) + coef.dot(G_oo * coef);
    nonzero = (coef.array() != 0.0).count();
  }
  const double variance = std::max(rss / nd, kVarianceFloor);
  return nd * std::log(variance) + static_cast<double>(nonzero) * std::log(nd);
}

}  // namespace

PrecisionEstimate ave_from_fits(const std::vector<CholeskyPair>& fits,
                                std::uint64_t seed) {
  if (fits.empty()) throw ArgumentError("no fits to average");
  const Index p = fits.front().dim();
  Matrix sum = Matrix::Zero(p, p);
  for (const auto& fit : fits) sum += precision_from_factors(fit.T, fit.D);
  sum /= static_cast<double>(fits.size());
  return PrecisionEstimate(std::move(sum), Method::kAve,
                           EstimateMeta{static_cast<int>(fits.size()), 0.0, seed});
}

PrecisionEstimate estimate_ave(const Matrix& X, int M, std::uint64_t seed,
                               const EnsembleOptions& options) {
  const auto orders = draw_permutations(X.cols(), M, seed);
  return ave_from_fits(fit_orders(X, orders, seed, options), seed);
}

Permutation bic_order_select(const Matrix& X) {
  const Index n = X.rows();
  const Index p = X.cols();
  if (p < 1) throw ArgumentError("bic_order_select needs p >= 1");
  if (n <= 2) throw ArgumentError("bic_order_select needs n > 2");

  const Matrix G = X.transpose() * X;
  std::vector<Index> candidates(static_cast<std::size_t>(p));
  std::iota(candidates.begin(), candidates.end(), Index{0});
  std::vector<Index> order(static_cast<std::size_t>(p));

  for (Index position = p - 1; position >= 0; --position) {
    std::size_t best = 0;
    double best_bic = std::numeric_limits<double>::infinity();
    std::vector<Index> others;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      others.clear();
      for (std::size_t o = 0; o < candidates.size(); ++o) {
        if (o != c) others.push_back(candidates[o]);
      }
      const double bic = regression_bic(G, candidates[c], others, n);
      if (bic < best_bic) {
        best_bic = bic;
        best = c;
      }
    }
    order[static_cast<std::size_t>(position)] = candidates[best];
    candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(best));
  }
  return Permutation(std::move(order));
}

PrecisionEstimate estimate_bic_order(const Matrix& X, std::uint64_t seed,
                                     const CvConfig& cv) {
  const Permutation order = bic_order_select(X);
  CvConfig tuned = cv;
  tuned.seed = fold_seed(seed);
  const CholeskyPair pair =
      back_transform(fit_single_order(X, order, tuned), order);
  return reconstruct_precision(pair, Method::kBicOrder,
                               EstimateMeta{1, 0.0, seed});
}

Matrix sample_covariance(const Matrix& X) {
  if (X.rows() == 0) throw ArgumentError("sample_covariance needs n >= 1");
  const Matrix centered = center_columns(X);
  Matrix S = centered.transpose() * centered / static_cast<double>(X.rows());
  return 0.5 * (S + S.transpose());
}

PrecisionEstimate diagonal_precision(const Matrix& S) {
  if (S.rows() != S.cols()) throw ArgumentError("covariance must be square");
  Matrix omega = Matrix::Zero(S.rows(), S.cols());
  for (Index j = 0; j < S.rows(); ++j) {
    omega(j, j) = 1.0 / std::max(S(j, j), kVarianceFloor);
  }
  return PrecisionEstimate(std::move(omega), Method::kDiagonal);
}

PrecisionEstimate sample_precision(const Matrix& S) {
  if (S.rows() != S.cols()) throw ArgumentError("covariance must be square");
  const Matrix sym = 0.5 * (S + S.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(sym);
  const Vector& values = eig.eigenvalues();
  if (values.size() == 0 || !(values.minCoeff() > 1e-10 * values.maxCoeff())) {
    throw SingularEstimateError(
        "sample covariance is singular; its inverse does not exist");
  }
  const Matrix& V = eig.eigenvectors();
  Matrix inverse = V * values.cwiseInverse().asDiagonal() * V.transpose();
  return PrecisionEstimate(std::move(inverse), Method::kSample);
}

}  // namespace permchol
