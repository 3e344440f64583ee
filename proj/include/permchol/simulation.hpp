#pragma once

// True precision-matrix models, a seeded Gaussian sampler and the Monte Carlo
// benchmark runner.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "permchol/ensemble.hpp"
#include "permchol/mcd.hpp"
#include "permchol/metrics.hpp"

namespace permchol {

/// Models 1..6:
///   1  banded MA(0.5, 0.3): unit diagonal, 0.5 on the first and 0.3 on the
///      second off-diagonals
///   2  model 1 with rows and columns permuted by a perm_seed permutation
///   3  block-diag(CS(0.5) of size 10, I_{p-10})
///   4  AR(0.5): 0.5^|i-j|
///   5  diag(1/p, 1/(p-1), ..., 1)
///   6  T' D^{-1} T with T unit lower bidiagonal (subdiagonal -0.8), D = 0.01 I
struct ModelSpec {
  int id = 1;
  Index p = 30;
  std::uint64_t perm_seed = 0;
};

/// Throws ArgumentError on an unknown id, p < 2, or model 3 with p < 10.
Matrix make_model(const ModelSpec& spec);

/// The permutation used by model 2.
Permutation model2_permutation(Index p, std::uint64_t perm_seed);

/// n rows iid N(0, omega^{-1}): z L' with Sigma = L L' and z standard normal
/// from a generator seeded with `seed`. Throws NotPositiveDefiniteError.
Matrix sample_mvn(const Matrix& omega, Index n, std::uint64_t seed);

struct ExperimentConfig {
  ModelSpec model;
  Index n = 50;
  int reps = 50;
  int M = 100;
  std::vector<Method> methods{Method::kM1, Method::kM2};
  std::uint64_t seed = 0;
  EnsembleOptions ensemble;  // ensemble.threads is ignored; reps run in parallel
  int threads = 1;
};

/// Names of the summarized losses, in report order.
const std::vector<std::string_view>& loss_names();

/// Value of the named loss; nullopt when absent (delta1/delta2 of a non-PD
/// estimate).
std::optional<double> loss_value(const LossReport& report,
                                 std::string_view name);

struct LossSummary {
  double mean = 0.0;
  std::optional<double> se;  // sd (denominator count - 1) / sqrt(count)
  int count = 0;
};

struct MethodSummary {
  Method method = Method::kM1;
  std::vector<LossSummary> losses;  // parallel to loss_names()
  int failures = 0;
  std::vector<std::string> failure_messages;
  /// Per-rep reports; nullopt for reps where the method failed.
  std::vector<std::optional<LossReport>> per_rep;

  const LossSummary& loss(std::string_view name) const;
};

struct ExperimentReport {
  ExperimentConfig config;
  Matrix omega_true;
  std::vector<MethodSummary> methods;

  const MethodSummary& method(Method m) const;
};

/// Seed of repetition `rep`'s data and of its estimators.
std::uint64_t rep_data_seed(std::uint64_t seed, int rep);
std::uint64_t rep_estimator_seed(std::uint64_t seed, int rep);

/// Every rep samples centered data, runs each method on it and scores it
/// against the true model. Failures are counted per method, never dropped
/// silently. Throws ArgumentError on an invalid config.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

/// Mean and standard error of the available values.
LossSummary summarize(const std::vector<double>& values);

}  // namespace permchol
