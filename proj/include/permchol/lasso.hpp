#pragma once

// Lasso regression for the modified Cholesky regressions.
//
// Objective:  ||y - Z a||_2^2 + lambda * ||a||_1   (no 1/n or 1/2 factor).
// Coordinate update:  a_j <- S(z_j' r_j, lambda / 2) / (z_j' z_j)
// where r_j is the partial residual without predictor j.
//
// The solver works on Gram quantities (Z'Z, Z'y, y'y). Every regression the
// ensemble runs uses a subset of the data columns as predictors and another
// column as response, so all the Gram quantities it needs are submatrices of
// one p x p cross-product matrix per CV fold; GramCache holds those.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "permchol/types.hpp"

namespace permchol {

struct LassoOptions {
  double tol = 1e-7;       // max absolute coefficient change per sweep
  int max_iter = 10'000;   // sweeps
  bool record_objective = false;
  // Jump to the exact minimizer on a settled sign pattern (see lasso.cpp).
  // Off gives plain cyclic coordinate descent.
  bool support_solve = true;
};

struct LassoFit {
  Vector coef;
  double lambda = 0.0;
  double objective = 0.0;
  int iterations = 0;
  /// Objective after each sweep; filled only with record_objective.
  std::vector<double> objective_trace;
};

/// Throws ArgumentError on shape mismatch, negative lambda or non-finite
/// input; ConvergenceError (carrying the last iterate) after max_iter sweeps.
LassoFit lasso_fit(const Matrix& Z, const Vector& y, double lambda,
                   const LassoOptions& options = {},
                   const Vector* warm_start = nullptr);

/// Evaluates ||y - Z a||^2 + lambda ||a||_1 from the residual.
double lasso_objective(const Matrix& Z, const Vector& y, const Vector& coef,
                       double lambda);

/// 2 * max_j |z_j' y|: the smallest lambda giving the all-zero solution.
double lambda_max(const Matrix& Z, const Vector& y);

struct CvConfig {
  int grid_size = 20;
  double min_ratio = 1e-3;  // smallest grid value relative to lambda_max
  int folds = 5;
  std::uint64_t seed = 0;
  LassoOptions solver;
};

/// `grid_size` log-spaced values from lambda_max down to min_ratio*lambda_max.
/// Returns {0} when lambda_max is 0.
std::vector<double> lambda_grid(double lambda_max, const CvConfig& cfg);

/// Fold label in [0, folds) for each of n observations. Balanced sizes; the
/// assignment is a seeded shuffle, so it depends only on (n, folds, seed).
std::vector<int> assign_folds(Index n, int folds, std::uint64_t seed);

/// Grid value with the smallest mean out-of-fold squared prediction error;
/// ties go to the larger lambda. Throws ArgumentError if the grid is empty,
/// folds < 2, or n < folds.
double cv_select_lambda(const Matrix& Z, const Vector& y,
                        std::span<const double> grid, int folds,
                        std::uint64_t seed, const LassoOptions& options = {});

/// Variance (denominator n) of y - Z coef, or of y alone when Z has no
/// columns. Floored at kVarianceFloor. Throws ArgumentError when n = 0.
double residual_variance(const Vector& y, const Matrix& Z, const Vector& coef);

/// Gram form of one Lasso problem: G = Z'Z, c = Z'y, yy = y'y.
struct GramProblem {
  Matrix G;
  Vector c;
  double yy = 0.0;
};

struct GramSolveResult {
  int iterations = 0;
  bool converged = false;
};

/// Coordinate descent on a Gram problem; `coef` is the warm start and
/// receives the solution. Does not throw on non-convergence.
GramSolveResult solve_gram_lasso(const GramProblem& problem, double lambda,
                                 Vector& coef, const LassoOptions& options,
                                 std::vector<double>* objective_trace = nullptr);

double gram_objective(const GramProblem& problem, const Vector& coef,
                      double lambda);

/// Cross-product matrices of a data matrix W (n x p): the full W'W plus,
/// for each CV fold, the held-out and training cross products.
class GramCache {
 public:
  GramCache(const Matrix& W, int folds, std::uint64_t seed);

  Index n() const noexcept { return n_; }
  int folds() const noexcept { return static_cast<int>(test_.size()); }
  const std::vector<int>& fold_of() const noexcept { return fold_of_; }
  const Matrix& full() const noexcept { return full_; }

  /// Regress column `response` on columns `predictors` using all rows.
  GramProblem full_problem(std::span<const Index> predictors,
                           Index response) const;

  /// CV-selected lambda for the regression, using the default grid built
  /// from the full-data lambda_max (or `grid` when given).
  double select_lambda(std::span<const Index> predictors, Index response,
                       const CvConfig& cfg,
                       std::span<const double> grid = {}) const;

 private:
  static GramProblem extract(const Matrix& gram,
                             std::span<const Index> predictors,
                             Index response);

  Index n_ = 0;
  Matrix full_;
  std::vector<Matrix> train_;
  std::vector<Matrix> test_;
  std::vector<int> fold_of_;
};

}  // namespace permchol
