#pragma once

#include <optional>

#include "permchol/mcd.hpp"

namespace permchol {

/// Default magnitude at or below which an estimated entry counts as zero.
inline constexpr double kZeroTolerance = 1e-8;

/// Accuracy and support-recovery losses of one estimate against the truth.
/// fp_count: true nonzeros estimated as zero; fn_count: true zeros estimated
/// as nonzero. delta1/delta2 are absent when the estimate is not PD.
struct LossReport {
  std::optional<double> delta1;
  std::optional<double> delta2;
  double delta3 = 0.0;
  double mae = 0.0;
  double mse = 0.0;
  double fsl_percent = 0.0;
  double frobenius = 0.0;  // ||omega_hat - omega||_F
  long long fp_count = 0;
  long long fn_count = 0;
};

/// Throws ArgumentError on shape mismatch and NotPositiveDefiniteError when
/// the reference is not PD.
LossReport loss_report(const Matrix& omega_hat, const Matrix& omega_true,
                       double zero_tol = kZeroTolerance);
LossReport loss_report(const PrecisionEstimate& omega_hat,
                       const Matrix& omega_true,
                       double zero_tol = kZeroTolerance);

/// log|A| through a Cholesky factorization; nullopt unless A is PD.
std::optional<double> log_det_pd(const Matrix& A);

}  // namespace permchol
