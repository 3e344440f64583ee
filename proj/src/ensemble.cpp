#include "permchol/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "permchol/baselines.hpp"
#include "permchol/errors.hpp"
#include "permchol/parallel.hpp"
#include "permchol/seeding.hpp"

namespace permchol {

namespace {

constexpr std::uint64_t kPermutationStream = 1;
constexpr std::uint64_t kFoldStream = 2;

std::optional<GramCache> make_cache(const Matrix& X, const CvConfig& cv) {
  if (X.cols() < 2) return std::nullopt;
  return GramCache(X, cv.folds, cv.seed);
}

}  // namespace

std::uint64_t permutation_seed(std::uint64_t seed) {
  return derive_seed(seed, kPermutationStream);
}

std::uint64_t fold_seed(std::uint64_t seed) {
  return derive_seed(seed, kFoldStream);
}

std::vector<Permutation> draw_permutations(Index p, int M, std::uint64_t seed) {
  if (M < 1) throw ArgumentError("need at least one permutation");
  std::mt19937_64 rng(permutation_seed(seed));
  std::vector<Permutation> orders;
  orders.reserve(static_cast<std::size_t>(M));
  std::vector<Index> map(static_cast<std::size_t>(p));
  for (int k = 0; k < M; ++k) {
    std::iota(map.begin(), map.end(), Index{0});
    std::shuffle(map.begin(), map.end(), rng);
    orders.emplace_back(map);
  }
  return orders;
}

CholeskyPair fit_single_order(const Matrix& X, const Permutation& pi,
                              const CvConfig& cv) {
  const auto cache = make_cache(X, cv);
  if (!cache) {
    if (X.cols() < 1) throw ArgumentError("fit_single_order needs p >= 1");
    if (pi.size() != X.cols()) {
      throw ArgumentError("order length does not match the data");
    }
    CholeskyPair pair{Matrix::Identity(1, 1), Vector(1), pi, Frame::kFitted};
    pair.D(0) = residual_variance(X.col(0), Matrix(X.rows(), 0), Vector());
    return pair;
  }
  return fit_single_order(X, *cache, pi, cv);
}

CholeskyPair fit_single_order(const Matrix& X, const GramCache& cache,
                              const Permutation& pi, const CvConfig& cv) {
  const Index p = X.cols();
  if (p < 1) throw ArgumentError("fit_single_order needs p >= 1");
  if (X.rows() < 2) throw ArgumentError("fit_single_order needs n >= 2");
  if (pi.size() != p) {
    throw ArgumentError("order length does not match the data");
  }

  CholeskyPair pair{Matrix::Identity(p, p), Vector(p), pi, Frame::kFitted};
  const auto& order = pi.indices();
  pair.D(0) = residual_variance(X.col(order[0]), Matrix(X.rows(), 0), Vector());

  for (Index j = 1; j < p; ++j) {
    const std::span<const Index> predecessors(order.data(),
                                              static_cast<std::size_t>(j));
    const Index response = order[static_cast<std::size_t>(j)];
    const double lambda = cache.select_lambda(predecessors, response, cv);
    const GramProblem problem = cache.full_problem(predecessors, response);
    Vector coef = Vector::Zero(j);
    if (!solve_gram_lasso(problem, lambda, coef, cv.solver).converged) {
      throw ConvergenceError("lasso did not converge for position " +
                                 std::to_string(j),
                             coef);
    }
    for (Index k = 0; k < j; ++k) {
      pair.T(j, k) = coef(k) == 0.0 ? 0.0 : -coef(k);  // no negative zeros
    }
    const Matrix Z = X(Eigen::all, predecessors);
    pair.D(j) = residual_variance(X.col(response), Z, coef);
  }
  return pair;
}

CholeskyPair back_transform(const CholeskyPair& fitted, const Permutation& pi) {
  if (fitted.D.size() != pi.size()) {
    throw ArgumentError("factor pair and permutation sizes differ");
  }
  CholeskyPair out{conjugate_by_permutation(fitted.T, pi), Vector(pi.size()),
                   pi, Frame::kOriginal};
  for (Index j = 0; j < pi.size(); ++j) out.D(pi(j)) = fitted.D(j);
  return out;
}

std::vector<CholeskyPair> fit_orders(const Matrix& X,
                                     const std::vector<Permutation>& orders,
                                     std::uint64_t seed,
                                     const EnsembleOptions& options) {
  CvConfig cv = options.cv;
  cv.seed = fold_seed(seed);
  const auto cache = make_cache(X, cv);

  std::vector<CholeskyPair> fits(orders.size());
  parallel_for(orders.size(), options.threads, [&](std::size_t k) {
    const CholeskyPair fitted =
        cache ? fit_single_order(X, *cache, orders[k], cv)
              : fit_single_order(X, orders[k], cv);
    fits[k] = back_transform(fitted, orders[k]);
  });
  return fits;
}

EnsembleState average_fits(const std::vector<CholeskyPair>& fits,
                           std::vector<Permutation> orders,
                           std::uint64_t seed) {
  if (fits.empty()) throw ArgumentError("no fits to average");
  const Index p = fits.front().dim();
  EnsembleState state;
  state.T_tilde = Matrix::Zero(p, p);
  state.D_tilde = Vector::Zero(p);
  for (const auto& fit : fits) {
    state.T_tilde += fit.T;
    state.D_tilde += fit.D;
  }
  const double inv_m = 1.0 / static_cast<double>(fits.size());
  state.T_tilde *= inv_m;
  state.D_tilde *= inv_m;
  // Every T_k has an exact unit diagonal; keep the average's exact too.
  state.T_tilde.diagonal().setOnes();
  state.M = static_cast<int>(fits.size());
  state.seed = seed;
  state.orders = std::move(orders);
  return state;
}

EnsembleState ensemble_fit(const Matrix& X, int M, std::uint64_t seed,
                           const EnsembleOptions& options) {
  return ensemble_fit(X, draw_permutations(X.cols(), M, seed), seed, options);
}

EnsembleState ensemble_fit(const Matrix& X, std::vector<Permutation> orders,
                           std::uint64_t seed, const EnsembleOptions& options) {
  auto fits = fit_orders(X, orders, seed, options);
  return average_fits(fits, std::move(orders), seed);
}

Matrix hard_threshold(const Matrix& T, double delta) {
  Matrix out = T;
  for (Index j = 0; j < T.cols(); ++j) {
    for (Index i = 0; i < T.rows(); ++i) {
      if (i != j && std::abs(T(i, j)) <= delta) out(i, j) = 0.0;
    }
  }
  return out;
}

double bic_score(const Matrix& omega, const Matrix& S, Index n) {
  if (omega.rows() != S.rows() || omega.cols() != S.cols()) {
    throw ArgumentError("estimate and sample covariance shapes differ");
  }
  if (n < 1) throw ArgumentError("bic_score needs n >= 1");
  const Eigen::LLT<Matrix> llt(omega);
  if (llt.info() != Eigen::Success) {
    throw SingularEstimateError("thresholded estimate is not positive definite");
  }
  const Vector diag = llt.matrixLLT().diagonal();
  if (!(diag.minCoeff() > 0.0)) {
    throw SingularEstimateError("thresholded estimate is singular");
  }
  const double log_det = 2.0 * diag.array().log().sum();
  const double trace = omega.cwiseProduct(S).sum();
  Index nonzero = 0;
  for (Index j = 0; j < omega.cols(); ++j) {
    for (Index i = 0; i <= j; ++i) {
      if (omega(i, j) != 0.0) ++nonzero;
    }
  }
  const double nd = static_cast<double>(n);
  return -log_det + trace + std::log(nd) / nd * static_cast<double>(nonzero);
}

double bic_score(const PrecisionEstimate& omega, const Matrix& S, Index n) {
  return bic_score(omega.omega(), S, n);
}

std::vector<double> threshold_grid(const Matrix& T_tilde, int count) {
  std::vector<double> magnitudes;
  for (Index j = 0; j < T_tilde.cols(); ++j) {
    for (Index i = 0; i < T_tilde.rows(); ++i) {
      if (i != j && T_tilde(i, j) != 0.0) {
        magnitudes.push_back(std::abs(T_tilde(i, j)));
      }
    }
  }
  std::vector<double> grid{0.0};
  if (!magnitudes.empty() && count > 0) {
    std::sort(magnitudes.begin(), magnitudes.end());
    const auto last = static_cast<double>(magnitudes.size() - 1);
    for (int l = 1; l <= count; ++l) {
      // Linear interpolation between order statistics.
      const double h = last * static_cast<double>(l) / (count + 1);
      const auto lo = static_cast<std::size_t>(std::floor(h));
      const std::size_t hi = std::min(lo + 1, magnitudes.size() - 1);
      const double frac = h - static_cast<double>(lo);
      grid.push_back(magnitudes[lo] + frac * (magnitudes[hi] - magnitudes[lo]));
    }
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

ThresholdSelection select_threshold(const EnsembleState& state,
                                    const Matrix& S, Index n, int grid_size) {
  ThresholdSelection selection;
  selection.grid = threshold_grid(state.T_tilde, grid_size);
  selection.bic_values.reserve(selection.grid.size());
  std::optional<std::size_t> best;
  for (std::size_t l = 0; l < selection.grid.size(); ++l) {
    const Matrix T_delta = hard_threshold(state.T_tilde, selection.grid[l]);
    const Matrix omega = precision_from_factors(T_delta, state.D_tilde);
    std::optional<double> bic;
    try {
      bic = bic_score(omega, S, n);
    } catch (const SingularEstimateError&) {
    }
    selection.bic_values.push_back(bic);
    // Ascending grid: <= moves ties to the larger delta.
    if (bic && (!best || *bic <= *selection.bic_values[*best])) best = l;
  }
  if (!best) {
    throw EstimationError("no threshold gives a positive definite estimate");
  }
  selection.delta_opt = selection.grid[*best];
  return selection;
}

PrecisionEstimate precision_at_threshold(const EnsembleState& state,
                                         double delta, Method method) {
  const Matrix T_delta = hard_threshold(state.T_tilde, delta);
  return PrecisionEstimate(precision_from_factors(T_delta, state.D_tilde),
                           method, EstimateMeta{state.M, delta, state.seed});
}

PrecisionEstimate m1_from_state(const EnsembleState& state) {
  return precision_at_threshold(state, 0.0, Method::kM1);
}

PrecisionEstimate m2_from_state(const EnsembleState& state, const Matrix& X,
                                int grid_size, ThresholdSelection* selection) {
  const Matrix S = sample_covariance(X);
  ThresholdSelection chosen = select_threshold(state, S, X.rows(), grid_size);
  PrecisionEstimate estimate =
      precision_at_threshold(state, chosen.delta_opt, Method::kM2);
  if (selection != nullptr) *selection = std::move(chosen);
  return estimate;
}

PrecisionEstimate estimate_m1(const Matrix& X, int M, std::uint64_t seed,
                              const EnsembleOptions& options) {
  return m1_from_state(ensemble_fit(X, M, seed, options));
}

PrecisionEstimate estimate_m2(const Matrix& X, int M, std::uint64_t seed,
                              const EnsembleOptions& options) {
  return m2_from_state(ensemble_fit(X, M, seed, options), X,
                       options.threshold_grid);
}

}  // namespace permchol
