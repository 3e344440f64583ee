#pragma once

// Permutation-ensemble modified Cholesky estimator.
//
// For each of M random variable orders the data are permuted, the factor pair
// (T, D) is estimated by Lasso regressions of each variable on its
// predecessors, and the pair is mapped back to the original variable labels.
// The back-transformed T's and D's are averaged (M1). Hard thresholding of
// the averaged T with a BIC-selected threshold gives the sparse estimate (M2).

#include <cstdint>
#include <optional>
#include <vector>

#include "permchol/lasso.hpp"
#include "permchol/mcd.hpp"

namespace permchol {

struct EnsembleOptions {
  CvConfig cv;               // cv.seed is ignored; folds derive from the run seed
  int threshold_grid = 50;   // H: quantiles of |off-diagonal T~| added to {0}
  int threads = 1;
};

struct EnsembleState {
  Matrix T_tilde;
  Vector D_tilde;
  int M = 0;
  std::uint64_t seed = 0;
  std::vector<Permutation> orders;
};

struct ThresholdSelection {
  std::vector<double> grid;                      // ascending
  std::vector<std::optional<double>> bic_values; // nullopt: estimate not PD
  double delta_opt = 0.0;
};

/// M iid uniform permutations of {0..p-1} (duplicates possible).
std::vector<Permutation> draw_permutations(Index p, int M, std::uint64_t seed);

/// Seeds used for the two random streams of a run with `seed`.
std::uint64_t permutation_seed(std::uint64_t seed);
std::uint64_t fold_seed(std::uint64_t seed);

/// Factor pair of centered X under order pi, in pi coordinates. Each
/// regression uses a lambda chosen by cv.folds-fold CV (folds from cv.seed).
CholeskyPair fit_single_order(const Matrix& X, const Permutation& pi,
                              const CvConfig& cv);

/// Same, reusing cross products already computed for X.
CholeskyPair fit_single_order(const Matrix& X, const GramCache& cache,
                              const Permutation& pi, const CvConfig& cv);

/// T = P T_pi P', D = P D_pi P' (diagonal permuted by pi).
CholeskyPair back_transform(const CholeskyPair& fitted, const Permutation& pi);

/// Fits every order and returns the back-transformed pairs in order.
std::vector<CholeskyPair> fit_orders(const Matrix& X,
                                     const std::vector<Permutation>& orders,
                                     std::uint64_t seed,
                                     const EnsembleOptions& options);

/// Averages back-transformed pairs with a fixed k = 0..M-1 summation order.
EnsembleState average_fits(const std::vector<CholeskyPair>& fits,
                           std::vector<Permutation> orders, std::uint64_t seed);

EnsembleState ensemble_fit(const Matrix& X, int M, std::uint64_t seed,
                           const EnsembleOptions& options = {});

/// Ensemble over caller-supplied orders.
EnsembleState ensemble_fit(const Matrix& X, std::vector<Permutation> orders,
                           std::uint64_t seed,
                           const EnsembleOptions& options = {});

/// Zeroes off-diagonal entries with |t| <= delta. The diagonal is kept.
Matrix hard_threshold(const Matrix& T, double delta);

/// -log|Omega| + tr(Omega S) + (log n / n) * #{i <= j : Omega_ij != 0}.
/// Throws SingularEstimateError if Omega is not positive definite.
double bic_score(const Matrix& omega, const Matrix& S, Index n);
double bic_score(const PrecisionEstimate& omega, const Matrix& S, Index n);

/// {0} plus `count` quantiles (probabilities l / (count + 1)) of the nonzero
/// off-diagonal |t~_ij|; ascending, duplicates removed. The largest magnitude
/// is never on the grid, so some off-diagonal structure always survives.
std::vector<double> threshold_grid(const Matrix& T_tilde, int count);

/// Minimum-BIC threshold over threshold_grid(T~, grid_size); ties go to the
/// larger delta, non-PD estimates are skipped. Throws EstimationError if no
/// grid value gives a PD estimate.
ThresholdSelection select_threshold(const EnsembleState& state,
                                    const Matrix& S, Index n,
                                    int grid_size = 50);

/// T~_delta' D~^{-1} T~_delta.
PrecisionEstimate precision_at_threshold(const EnsembleState& state,
                                         double delta, Method method);

PrecisionEstimate estimate_m1(const Matrix& X, int M, std::uint64_t seed,
                              const EnsembleOptions& options = {});
PrecisionEstimate estimate_m2(const Matrix& X, int M, std::uint64_t seed,
                              const EnsembleOptions& options = {});

/// M1 and M2 from an existing ensemble (X is the centered data it came from).
PrecisionEstimate m1_from_state(const EnsembleState& state);
PrecisionEstimate m2_from_state(const EnsembleState& state, const Matrix& X,
                                int grid_size = 50,
                                ThresholdSelection* selection = nullptr);

}  // namespace permchol
