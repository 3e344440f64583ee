#pragma once

// Comparison estimators built on the same modified Cholesky machinery, plus
// the plain sample-covariance based estimators.

#include <cstdint>
#include <vector>

#include "permchol/ensemble.hpp"
#include "permchol/mcd.hpp"

namespace permchol {

/// Naive ensemble: average of the per-order precision matrices. Uses the
/// same permutation stream as ensemble_fit for equal (M, seed).
PrecisionEstimate estimate_ave(const Matrix& X, int M, std::uint64_t seed,
                               const EnsembleOptions& options = {});

/// Average of reconstruct(fit) over back-transformed fits, summed in order.
PrecisionEstimate ave_from_fits(const std::vector<CholeskyPair>& fits,
                                std::uint64_t seed);

/// Order chosen backwards by regression BIC: while candidates remain, each
/// candidate is regressed on the other candidates by least squares and the
/// one with the smallest n log(RSS/n) + k log n takes the last open position.
/// Regressions with at least n predictors add 1e-6 I to the normal equations.
Permutation bic_order_select(const Matrix& X);

/// Single-order Lasso modified Cholesky fit under bic_order_select's order.
PrecisionEstimate estimate_bic_order(const Matrix& X, std::uint64_t seed = 0,
                                     const CvConfig& cv = {});

/// (1/n) X_c' X_c for the column-centered X_c.
Matrix sample_covariance(const Matrix& X);

/// diag(1 / max(S_jj, kVarianceFloor)).
PrecisionEstimate diagonal_precision(const Matrix& S);

/// S^{-1}. Throws SingularEstimateError when S is numerically singular
/// (smallest eigenvalue <= 1e-10 times the largest).
PrecisionEstimate sample_precision(const Matrix& S);

}  // namespace permchol
