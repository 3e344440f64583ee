#include "permchol/simulation.hpp"

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

constexpr std::uint64_t kModelPermutationStream = 11;
constexpr std::uint64_t kRepStream = 1000;

Matrix banded_ma(Index p) {
  Matrix omega = Matrix::Identity(p, p);
  for (Index i = 0; i + 1 < p; ++i) omega(i, i + 1) = omega(i + 1, i) = 0.5;
  for (Index i = 0; i + 2 < p; ++i) omega(i, i + 2) = omega(i + 2, i) = 0.3;
  return omega;
}

}  // namespace

Permutation model2_permutation(Index p, std::uint64_t perm_seed) {
  std::vector<Index> map(static_cast<std::size_t>(p));
  std::iota(map.begin(), map.end(), Index{0});
  std::mt19937_64 rng(derive_seed(perm_seed, kModelPermutationStream));
  std::shuffle(map.begin(), map.end(), rng);
  return Permutation(std::move(map));
}

Matrix make_model(const ModelSpec& spec) {
  const Index p = spec.p;
  if (p < 2) throw ArgumentError("models need p >= 2");
  Matrix omega;
  switch (spec.id) {
    case 1:
      omega = banded_ma(p);
      break;
    case 2:
      omega = conjugate_by_permutation(banded_ma(p),
                                       model2_permutation(p, spec.perm_seed));
      break;
    case 3: {
      if (p < 10) throw ArgumentError("model 3 needs p >= 10");
      omega = Matrix::Identity(p, p);
      omega.topLeftCorner(10, 10).setConstant(0.5);
      omega.topLeftCorner(10, 10).diagonal().setOnes();
      break;
    }
    case 4:
      omega.resize(p, p);
      for (Index j = 0; j < p; ++j) {
        for (Index i = 0; i < p; ++i) {
          omega(i, j) = std::pow(0.5, static_cast<double>(std::abs(i - j)));
        }
      }
      break;
    case 5:
      omega = Matrix::Zero(p, p);
      for (Index j = 0; j < p; ++j) {
        omega(j, j) = 1.0 / static_cast<double>(p - j);
      }
      break;
    case 6: {
      Matrix T = Matrix::Identity(p, p);
      for (Index j = 1; j < p; ++j) T(j, j - 1) = -0.8;
      omega = precision_from_factors(T, Vector::Constant(p, 0.01));
      break;
    }
    default:
      throw ArgumentError("unknown model id " + std::to_string(spec.id));
  }
  if (!(min_eigenvalue(omega) > 0.0)) {
    throw NotPositiveDefiniteError("model " + std::to_string(spec.id) +
                                   " is not positive definite at p = " +
                                   std::to_string(p));
  }
  return omega;
}

Matrix sample_mvn(const Matrix& omega, Index n, std::uint64_t seed) {
  const Index p = omega.rows();
  if (omega.cols() != p) throw ArgumentError("omega must be square");
  if (n < 0) throw ArgumentError("sample size must be >= 0");
  const Eigen::LLT<Matrix> omega_llt(omega);
  if (omega_llt.info() != Eigen::Success) {
    throw NotPositiveDefiniteError("cannot sample: omega is not PD");
  }
  const Matrix sigma = omega_llt.solve(Matrix::Identity(p, p));
  const Eigen::LLT<Matrix> sigma_llt(0.5 * (sigma + sigma.transpose()));
  if (sigma_llt.info() != Eigen::Success) {
    throw NotPositiveDefiniteError("cannot sample: covariance is not PD");
  }
  const Matrix L = sigma_llt.matrixL();

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(n, p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) z(i, j) = normal(rng);
  }
  return z * L.transpose();
}

const std::vector<std::string_view>& loss_names() {
  static const std::vector<std::string_view> names{
      "delta1", "delta2", "delta3", "mae", "mse", "fsl", "frobenius"};
  return names;
}

std::optional<double> loss_value(const LossReport& report,
                                 std::string_view name) {
  if (name == "delta1") return report.delta1;
  if (name == "delta2") return report.delta2;
  if (name == "delta3") return report.delta3;
  if (name == "mae") return report.mae;
  if (name == "mse") return report.mse;
  if (name == "fsl") return report.fsl_percent;
  if (name == "frobenius") return report.frobenius;
  throw ArgumentError("unknown loss " + std::string(name));
}

const LossSummary& MethodSummary::loss(std::string_view name) const {
  const auto& names = loss_names();
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw ArgumentError("unknown loss " + std::string(name));
  return losses[static_cast<std::size_t>(it - names.begin())];
}

const MethodSummary& ExperimentReport::method(Method m) const {
  for (const auto& summary : methods) {
    if (summary.method == m) return summary;
  }
  throw ArgumentError("method " + std::string(method_name(m)) +
                      " was not part of the experiment");
}

std::uint64_t rep_data_seed(std::uint64_t seed, int rep) {
  return derive_seed(derive_seed(seed, kRepStream + static_cast<std::uint64_t>(rep)), 0);
}

std::uint64_t rep_estimator_seed(std::uint64_t seed, int rep) {
  return derive_seed(derive_seed(seed, kRepStream + static_cast<std::uint64_t>(rep)), 1);
}

LossSummary summarize(const std::vector<double>& values) {
  LossSummary summary;
  summary.count = static_cast<int>(values.size());
  if (values.empty()) return summary;
  double sum = 0.0;
  for (double v : values) sum += v;
  summary.mean = sum / static_cast<double>(values.size());
  if (values.size() >= 2) {
    double ss = 0.0;
    for (double v : values) ss += (v - summary.mean) * (v - summary.mean);
    const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    summary.se = sd / std::sqrt(static_cast<double>(values.size()));
  }
  return summary;
}

namespace {

struct RepOutcome {
  std::vector<std::optional<LossReport>> reports;  // per method
  std::vector<std::string> errors;                 // per method, "" if ok
};

bool uses_ensemble(Method m) {
  return m == Method::kM1 || m == Method::kM2 || m == Method::kAve;
}

RepOutcome run_rep(const ExperimentConfig& cfg, const Matrix& omega_true,
                   int rep) {
  const std::size_t count = cfg.methods.size();
  RepOutcome out{std::vector<std::optional<LossReport>>(count),
                 std::vector<std::string>(count)};
  const Matrix X =
      center_columns(sample_mvn(omega_true, cfg.n, rep_data_seed(cfg.seed, rep)));
  const std::uint64_t est_seed = rep_estimator_seed(cfg.seed, rep);

  EnsembleOptions options = cfg.ensemble;
  options.threads = 1;

  std::vector<Permutation> orders;
  std::optional<std::vector<CholeskyPair>> fits;
  std::optional<std::string> fit_error;
  std::optional<EnsembleState> state;
  auto ensure_fits = [&] {
    if (fits || fit_error) return;
    try {
      orders = draw_permutations(X.cols(), cfg.M, est_seed);
      fits = fit_orders(X, orders, est_seed, options);
    } catch (const Error& e) {
      fit_error = e.what();
    }
  };

  for (std::size_t k = 0; k < count; ++k) {
    const Method method = cfg.methods[k];
    try {
      std::optional<PrecisionEstimate> estimate;
      if (uses_ensemble(method)) {
        ensure_fits();
        if (fit_error) throw EstimationError(*fit_error);
        if (method == Method::kAve) {
          estimate = ave_from_fits(*fits, est_seed);
        } else {
          if (!state) {
            state = average_fits(*fits, orders, est_seed);
          }
          estimate = method == Method::kM1
                         ? m1_from_state(*state)
                         : m2_from_state(*state, X, options.threshold_grid);
        }
      } else if (method == Method::kBicOrder) {
        estimate = estimate_bic_order(X, est_seed, options.cv);
      } else if (method == Method::kSample) {
        estimate = sample_precision(sample_covariance(X));
      } else if (method == Method::kDiagonal) {
        estimate = diagonal_precision(sample_covariance(X));
      } else {
        throw ArgumentError("method not supported in experiments");
      }
      out.reports[k] = loss_report(*estimate, omega_true);
    } catch (const ArgumentError&) {
      throw;
    } catch (const Error& e) {
      out.errors[k] = e.what();
    }
  }
  return out;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  if (cfg.reps < 1) throw ArgumentError("reps must be >= 1");
  if (cfg.n < 2) throw ArgumentError("n must be >= 2");
  if (cfg.M < 1) throw ArgumentError("M must be >= 1");
  if (cfg.methods.empty()) throw ArgumentError("no methods requested");

  ExperimentReport report;
  report.config = cfg;
  report.omega_true = make_model(cfg.model);

  std::vector<RepOutcome> outcomes(static_cast<std::size_t>(cfg.reps));
  parallel_for(outcomes.size(), cfg.threads, [&](std::size_t rep) {
    outcomes[rep] = run_rep(cfg, report.omega_true, static_cast<int>(rep));
  });

  const auto& names = loss_names();
  for (std::size_t k = 0; k < cfg.methods.size(); ++k) {
    MethodSummary summary;
    summary.method = cfg.methods[k];
    for (std::size_t rep = 0; rep < outcomes.size(); ++rep) {
      summary.per_rep.push_back(outcomes[rep].reports[k]);
      if (!outcomes[rep].errors[k].empty()) {
        ++summary.failures;
        summary.failure_messages.push_back("rep " + std::to_string(rep) + ": " +
                                           outcomes[rep].errors[k]);
      }
    }
    for (const auto name : names) {
      std::vector<double> values;
      for (const auto& r : summary.per_rep) {
        if (!r) continue;
        if (const auto v = loss_value(*r, name)) values.push_back(*v);
      }
      summary.losses.push_back(summarize(values));
    }
    report.methods.push_back(std::move(summary));
  }
  return report;
}

}  // namespace permchol
