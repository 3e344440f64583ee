#include "permchol/metrics.hpp"

#include <cmath>

#include "permchol/errors.hpp"

namespace permchol {

std::optional<double> log_det_pd(const Matrix& A) {
  const Eigen::LLT<Matrix> llt(A);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const Vector diag = llt.matrixLLT().diagonal();
  if (!(diag.minCoeff() > 0.0)) return std::nullopt;
  return 2.0 * diag.array().log().sum();
}

LossReport loss_report(const Matrix& omega_hat, const Matrix& omega_true,
                       double zero_tol) {
  const Index p = omega_true.rows();
  if (omega_true.cols() != p || omega_hat.rows() != p ||
      omega_hat.cols() != p || p == 0) {
    throw ArgumentError("loss_report needs two square matrices of equal size");
  }
  const Eigen::LLT<Matrix> truth(omega_true);
  const auto log_det_true = log_det_pd(omega_true);
  if (truth.info() != Eigen::Success || !log_det_true) {
    throw NotPositiveDefiniteError("reference precision matrix is not PD");
  }
  const double pd = static_cast<double>(p);
  LossReport report;

  // Sigma * Omega_hat with Sigma = Omega^{-1}.
  const Matrix sigma_omega_hat = truth.solve(omega_hat);
  const double trace1 = sigma_omega_hat.trace();
  const auto log_det_hat = log_det_pd(omega_hat);
  if (log_det_hat) {
    const double log_det_ratio = *log_det_hat - *log_det_true;
    report.delta1 = (trace1 - log_det_ratio - pd) / pd;

    const Eigen::LLT<Matrix> hat(omega_hat);
    const double trace2 = hat.solve(omega_true).trace();
    report.delta2 = (trace2 + log_det_ratio - pd) / pd;
  }
  report.delta3 = (trace1 - pd) * (trace1 - pd) / pd;

  const Matrix diff = omega_hat - omega_true;
  report.mae = diff.cwiseAbs().sum() / pd;
  report.mse = diff.squaredNorm() / pd;
  report.frobenius = diff.norm();

  for (Index j = 0; j < p; ++j) {
    for (Index i = 0; i < p; ++i) {
      const bool true_zero = omega_true(i, j) == 0.0;
      const bool est_zero = std::abs(omega_hat(i, j)) <= zero_tol;
      if (!true_zero && est_zero) ++report.fp_count;
      if (true_zero && !est_zero) ++report.fn_count;
    }
  }
  report.fsl_percent = 100.0 *
                       static_cast<double>(report.fp_count + report.fn_count) /
                       (pd * pd);
  return report;
}

LossReport loss_report(const PrecisionEstimate& omega_hat,
                       const Matrix& omega_true, double zero_tol) {
  return loss_report(omega_hat.omega(), omega_true, zero_tol);
}

}  // namespace permchol
