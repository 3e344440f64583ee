#include "permchol/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "permchol/errors.hpp"

namespace permchol {

namespace {

double soft_threshold(double z, double gamma) {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

// Held-out squared error ||y - Z a||^2 in Gram form.
double gram_sse(const GramProblem& problem, const Vector& coef) {
  return problem.yy - 2.0 * coef.dot(problem.c) +
         coef.dot(problem.G * coef);
}

std::vector<double> sorted_descending(std::span<const double> grid) {
  std::vector<double> out(grid.begin(), grid.end());
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

// Plain sweeps crawl when the support is large relative to n: coefficients
// approach their limits, or leave the support, geometrically slowly. Once the
// sign pattern settles this jumps to the minimizer on that pattern,
// G_AA a = c_A - (lambda/2) s, active-set style: if the solution flips a sign,
// or G_AA is singular (more columns than the data's rank), walk from the
// current point until the first coefficient reaches zero and drop it; if an
// inactive coordinate violates optimality, add the worst one; repeat.
// The result is accepted only if it satisfies the optimality conditions off
// the support, so a wrong guess costs time but never correctness.
bool solve_on_support(const GramProblem& problem, double half_lambda,
                      const std::vector<signed char>& pattern, Vector& coef,
                      Vector& grad) {
  std::vector<signed char> signs = pattern;
  std::vector<Index> support;
  for (std::size_t j = 0; j < signs.size(); ++j) {
    if (signs[j] != 0) support.push_back(static_cast<Index>(j));
  }
  Vector start = coef;
  for (Index round = 0; round < 2 * coef.size() + 2 && !support.empty(); ++round) {
    const auto m = static_cast<Index>(support.size());
    const Matrix G_aa = problem.G(support, support);
    const Vector current = start(support);
    Vector rhs = problem.c(support);
    for (Index k = 0; k < m; ++k) {
      rhs(k) -= half_lambda * signs[static_cast<std::size_t>(support[k])];
    }

    // Direction from the current point; a full step lands on the solution.
    Vector direction;
    double full_step = 1.0;
    const Eigen::LDLT<Matrix> ldlt(G_aa);
    Vector a = ldlt.solve(rhs);
    if (ldlt.info() == Eigen::Success && a.allFinite() &&
        (G_aa * a - rhs).norm() <= 1e-9 * (1.0 + rhs.norm())) {
      direction = a - current;
    } else {
      // Singular: move along a null direction that lowers the l1 norm.
      const Eigen::SelfAdjointEigenSolver<Matrix> eig(G_aa);
      if (eig.info() != Eigen::Success) return false;
      direction = eig.eigenvectors().col(0);
      double slope = 0.0;
      for (Index k = 0; k < m; ++k) {
        slope += signs[static_cast<std::size_t>(support[k])] * direction(k);
      }
      if (slope > 0.0) direction = -direction;
      full_step = std::numeric_limits<double>::infinity();
    }

    Index hit = -1;
    double step = full_step;
    for (Index k = 0; k < m; ++k) {
      const double value = current(k);
      const double move = direction(k);
      if (value * move < 0.0 && -value / move <= step) {
        step = -value / move;
        hit = k;
      }
    }
    if (hit < 0) {
      if (!std::isfinite(step)) return false;
      // Signs preserved at the full step: check the inactive coordinates.
      Vector candidate = Vector::Zero(coef.size());
      candidate(support) = a;
      const Vector new_grad = problem.c - problem.G * candidate;
      const double slack =
          1e-10 * (1.0 + half_lambda + problem.c.cwiseAbs().maxCoeff());
      Index worst = -1;
      double worst_excess = slack;
      for (Index j = 0; j < coef.size(); ++j) {
        const double excess = std::abs(new_grad(j)) - half_lambda;
        if (signs[static_cast<std::size_t>(j)] == 0 && excess > worst_excess) {
          worst_excess = excess;
          worst = j;
        }
      }
      if (worst < 0) {
        coef = candidate;
        grad = new_grad;
        return true;
      }
      signs[static_cast<std::size_t>(worst)] = new_grad(worst) > 0.0 ? 1 : -1;
      support.insert(std::upper_bound(support.begin(), support.end(), worst),
                     worst);
      start = candidate;
      continue;
    }
    // Move to where the coefficient reaches zero, then drop it.
    for (Index k = 0; k < m; ++k) {
      start(support[k]) = current(k) + step * direction(k);
    }
    start(support[hit]) = 0.0;
    signs[static_cast<std::size_t>(support[hit])] = 0;
    support.erase(support.begin() + hit);
  }
  return false;
}

}  // namespace

double gram_objective(const GramProblem& problem, const Vector& coef,
                      double lambda) {
  return gram_sse(problem, coef) + lambda * coef.lpNorm<1>();
}

GramSolveResult solve_gram_lasso(const GramProblem& problem, double lambda,
                                 Vector& coef, const LassoOptions& options,
                                 std::vector<double>* objective_trace) {
  const Index q = problem.G.rows();
  if (coef.size() != q) coef = Vector::Zero(q);
  const double half_lambda = 0.5 * lambda;

  // grad(j) = z_j' r with r = y - Z coef.
  Vector grad = problem.c - problem.G * coef;
  GramSolveResult result;
  std::vector<signed char> pattern(static_cast<std::size_t>(q), 0);
  std::vector<signed char> tried;
  int next_attempt = 0;
  int backoff = 8;
  for (int sweep = 1; sweep <= options.max_iter; ++sweep) {
    double max_change = 0.0;
    bool pattern_changed = false;
    for (Index j = 0; j < q; ++j) {
      const double gjj = problem.G(j, j);
      const double old = coef(j);
      double updated = 0.0;
      if (gjj > 0.0) {
        updated = soft_threshold(grad(j) + gjj * old, half_lambda) / gjj;
      }
      const double change = updated - old;
      if (change != 0.0) {
        grad.noalias() -= problem.G.col(j) * change;
        coef(j) = updated;
        max_change = std::max(max_change, std::abs(change));
      }
      const signed char sign = updated > 0.0 ? 1 : (updated < 0.0 ? -1 : 0);
      if (sign != pattern[static_cast<std::size_t>(j)]) {
        pattern[static_cast<std::size_t>(j)] = sign;
        pattern_changed = true;
      }
    }
    bool solved = false;
    // Try a direct solve whenever the sign pattern holds for a sweep; retry
    // an unchanged pattern with doubling gaps.
    if (options.support_solve && max_change >= options.tol &&
        ((!pattern_changed && pattern != tried) || sweep >= next_attempt)) {
      if (pattern != tried) backoff = 8;
      tried = pattern;
      solved = solve_on_support(problem, half_lambda, pattern, coef, grad);
      next_attempt = sweep + backoff;
      backoff *= 2;
    }
    if (objective_trace != nullptr) {
      objective_trace->push_back(gram_objective(problem, coef, lambda));
    }
    result.iterations = sweep;
    if (solved || max_change < options.tol) {
      result.converged = true;
      return result;
    }
  }
  return result;
}

double lasso_objective(const Matrix& Z, const Vector& y, const Vector& coef,
                       double lambda) {
  return (y - Z * coef).squaredNorm() + lambda * coef.lpNorm<1>();
}

double lambda_max(const Matrix& Z, const Vector& y) {
  if (Z.cols() == 0) return 0.0;
  return 2.0 * (Z.transpose() * y).cwiseAbs().maxCoeff();
}

LassoFit lasso_fit(const Matrix& Z, const Vector& y, double lambda,
                   const LassoOptions& options, const Vector* warm_start) {
  if (Z.rows() < 1 || Z.cols() < 1) {
    throw ArgumentError("lasso_fit needs n >= 1 and q >= 1");
  }
  if (Z.rows() != y.size()) {
    throw ArgumentError("design has " + std::to_string(Z.rows()) +
                        " rows but response has " + std::to_string(y.size()));
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ArgumentError("lambda must be finite and >= 0");
  }
  if (!Z.allFinite() || !y.allFinite()) {
    throw ArgumentError("lasso_fit inputs must be finite");
  }

  GramProblem problem{Z.transpose() * Z, Z.transpose() * y, y.squaredNorm()};
  LassoFit fit;
  fit.lambda = lambda;
  fit.coef = Vector::Zero(Z.cols());
  if (warm_start != nullptr && warm_start->size() == Z.cols()) {
    fit.coef = *warm_start;
  }
  const auto status =
      solve_gram_lasso(problem, lambda, fit.coef, options,
                       options.record_objective ? &fit.objective_trace : nullptr);
  fit.iterations = status.iterations;
  if (!status.converged) {
    throw ConvergenceError("lasso did not converge in " +
                               std::to_string(options.max_iter) + " sweeps",
                           fit.coef);
  }
  fit.objective = lasso_objective(Z, y, fit.coef, lambda);
  return fit;
}

std::vector<double> lambda_grid(double lambda_max, const CvConfig& cfg) {
  if (!(lambda_max > 0.0)) return {0.0};
  if (cfg.grid_size < 1) throw ArgumentError("grid_size must be >= 1");
  if (cfg.grid_size == 1) return {lambda_max};
  std::vector<double> grid(static_cast<std::size_t>(cfg.grid_size));
  const double log_hi = std::log(lambda_max);
  const double log_lo = std::log(lambda_max * cfg.min_ratio);
  const double step = (log_hi - log_lo) / (cfg.grid_size - 1);
  for (int i = 0; i < cfg.grid_size; ++i) {
    grid[static_cast<std::size_t>(i)] = std::exp(log_hi - step * i);
  }
  grid.front() = lambda_max;
  return grid;
}

std::vector<int> assign_folds(Index n, int folds, std::uint64_t seed) {
  if (folds < 2) throw ArgumentError("need at least 2 folds");
  if (n < folds) {
    throw ArgumentError("cannot split " + std::to_string(n) +
                        " observations into " + std::to_string(folds) +
                        " folds");
  }
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> fold_of(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < order.size(); ++i) {
    fold_of[static_cast<std::size_t>(order[i])] = static_cast<int>(i % folds);
  }
  return fold_of;
}

double cv_select_lambda(const Matrix& Z, const Vector& y,
                        std::span<const double> grid, int folds,
                        std::uint64_t seed, const LassoOptions& options) {
  if (grid.empty()) throw ArgumentError("lambda grid is empty");
  if (Z.rows() != y.size()) throw ArgumentError("Z and y row counts differ");
  for (double v : grid) {
    if (!(v >= 0.0)) throw ArgumentError("lambda grid values must be >= 0");
  }
  Matrix W(Z.rows(), Z.cols() + 1);
  W << Z, y;
  const GramCache cache(W, folds, seed);
  std::vector<Index> predictors(static_cast<std::size_t>(Z.cols()));
  std::iota(predictors.begin(), predictors.end(), Index{0});
  CvConfig cfg;
  cfg.folds = folds;
  cfg.seed = seed;
  cfg.solver = options;
  return cache.select_lambda(predictors, Z.cols(), cfg, grid);
}

double residual_variance(const Vector& y, const Matrix& Z, const Vector& coef) {
  const Index n = y.size();
  if (n == 0) throw ArgumentError("residual_variance needs n >= 1");
  Vector r = y;
  if (Z.cols() > 0) {
    if (Z.rows() != n || Z.cols() != coef.size()) {
      throw ArgumentError("residual_variance dimensions disagree");
    }
    r.noalias() -= Z * coef;
  }
  const double mean = r.mean();
  const double var = (r.array() - mean).square().sum() / static_cast<double>(n);
  return std::max(var, kVarianceFloor);
}

GramCache::GramCache(const Matrix& W, int folds, std::uint64_t seed)
    : n_(W.rows()), fold_of_(assign_folds(W.rows(), folds, seed)) {
  full_ = W.transpose() * W;
  train_.reserve(static_cast<std::size_t>(folds));
  test_.reserve(static_cast<std::size_t>(folds));
  for (int f = 0; f < folds; ++f) {
    std::vector<Index> in_rows;
    std::vector<Index> out_rows;
    for (Index i = 0; i < n_; ++i) {
      (fold_of_[static_cast<std::size_t>(i)] == f ? out_rows : in_rows)
          .push_back(i);
    }
    const Matrix held_out = W(out_rows, Eigen::all);
    const Matrix kept = W(in_rows, Eigen::all);
    test_.push_back(held_out.transpose() * held_out);
    train_.push_back(kept.transpose() * kept);
  }
}

GramProblem GramCache::extract(const Matrix& gram,
                               std::span<const Index> predictors,
                               Index response) {
  const auto q = static_cast<Index>(predictors.size());
  GramProblem problem;
  problem.G.resize(q, q);
  problem.c.resize(q);
  for (Index k = 0; k < q; ++k) {
    const Index col = predictors[static_cast<std::size_t>(k)];
    for (Index i = 0; i < q; ++i) {
      problem.G(i, k) = gram(predictors[static_cast<std::size_t>(i)], col);
    }
    problem.c(k) = gram(col, response);
  }
  problem.yy = gram(response, response);
  return problem;
}

GramProblem GramCache::full_problem(std::span<const Index> predictors,
                                    Index response) const {
  return extract(full_, predictors, response);
}

double GramCache::select_lambda(std::span<const Index> predictors,
                                Index response, const CvConfig& cfg,
                                std::span<const double> grid) const {
  std::vector<double> values;
  if (grid.empty()) {
    const GramProblem whole = full_problem(predictors, response);
    const double lmax =
        whole.c.size() > 0 ? 2.0 * whole.c.cwiseAbs().maxCoeff() : 0.0;
    values = lambda_grid(lmax, cfg);
  } else {
    values = sorted_descending(grid);
  }
  if (values.size() == 1) return values.front();

  std::vector<double> sse(values.size(), 0.0);
  for (std::size_t f = 0; f < train_.size(); ++f) {
    const GramProblem train = extract(train_[f], predictors, response);
    const GramProblem test = extract(test_[f], predictors, response);
    Vector coef = Vector::Zero(static_cast<Index>(predictors.size()));
    for (std::size_t g = 0; g < values.size(); ++g) {
      const auto status = solve_gram_lasso(train, values[g], coef, cfg.solver);
      if (!status.converged) {
        throw ConvergenceError("lasso did not converge during cross-validation",
                               coef);
      }
      sse[g] += gram_sse(test, coef);
    }
  }
  // Values are descending, so a strict comparison keeps the larger lambda
  // on ties.
  std::size_t best = 0;
  for (std::size_t g = 1; g < values.size(); ++g) {
    if (sse[g] < sse[best]) best = g;
  }
  return values[best];
}

}  // namespace permchol
