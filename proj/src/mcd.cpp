#include "permchol/mcd.hpp"

#include <algorithm>
#include <string>

#include "permchol/errors.hpp"

namespace permchol {

Permutation::Permutation(std::vector<Index> map) : map_(std::move(map)) {
  std::vector<bool> seen(map_.size(), false);
  const auto p = static_cast<Index>(map_.size());
  for (Index v : map_) {
    if (v < 0 || v >= p || seen[static_cast<std::size_t>(v)]) {
      throw ArgumentError("permutation is not a bijection on {0.." +
                          std::to_string(p - 1) + "}");
    }
    seen[static_cast<std::size_t>(v)] = true;
  }
}

Permutation Permutation::identity(Index p) {
  std::vector<Index> map(static_cast<std::size_t>(p));
  for (Index j = 0; j < p; ++j) map[static_cast<std::size_t>(j)] = j;
  return Permutation(std::move(map));
}

Permutation Permutation::from_one_based(std::span<const Index> map) {
  std::vector<Index> zero_based(map.begin(), map.end());
  for (auto& v : zero_based) --v;
  return Permutation(std::move(zero_based));
}

Permutation Permutation::inverse() const {
  std::vector<Index> inv(map_.size());
  for (std::size_t j = 0; j < map_.size(); ++j) {
    inv[static_cast<std::size_t>(map_[j])] = static_cast<Index>(j);
  }
  return Permutation(std::move(inv));
}

Permutation Permutation::compose(const Permutation& other) const {
  if (other.size() != size()) {
    throw ArgumentError("cannot compose permutations of different sizes");
  }
  std::vector<Index> out(map_.size());
  for (std::size_t j = 0; j < map_.size(); ++j) {
    out[j] = (*this)(other(static_cast<Index>(j)));
  }
  return Permutation(std::move(out));
}

bool Permutation::is_identity() const noexcept {
  for (std::size_t j = 0; j < map_.size(); ++j) {
    if (map_[j] != static_cast<Index>(j)) return false;
  }
  return true;
}

std::string_view method_name(Method m) {
  switch (m) {
    case Method::kM1: return "m1";
    case Method::kM2: return "m2";
    case Method::kAve: return "ave";
    case Method::kBicOrder: return "bic";
    case Method::kSample: return "sample";
    case Method::kDiagonal: return "dlda";
    case Method::kSingleOrder: return "single";
  }
  return "unknown";
}

std::optional<Method> parse_method(std::string_view name) {
  if (name == "m1") return Method::kM1;
  if (name == "m2") return Method::kM2;
  if (name == "ave") return Method::kAve;
  if (name == "bic") return Method::kBicOrder;
  if (name == "sample") return Method::kSample;
  if (name == "dlda" || name == "diagonal") return Method::kDiagonal;
  return std::nullopt;
}

PrecisionEstimate::PrecisionEstimate(Matrix omega, Method method,
                                     EstimateMeta meta)
    : method_(method), meta_(meta) {
  if (omega.rows() != omega.cols()) {
    throw ArgumentError("precision estimate must be square");
  }
  omega_ = 0.5 * (omega + omega.transpose());
}

Matrix apply_permutation(const Matrix& X, const Permutation& pi) {
  if (pi.size() != X.cols()) {
    throw ArgumentError("permutation length " + std::to_string(pi.size()) +
                        " does not match " + std::to_string(X.cols()) +
                        " columns");
  }
  Matrix out(X.rows(), X.cols());
  for (Index j = 0; j < X.cols(); ++j) out.col(j) = X.col(pi(j));
  return out;
}

namespace {

void require_square_match(const Matrix& A, const Permutation& pi) {
  if (A.rows() != A.cols() || A.rows() != pi.size()) {
    throw ArgumentError("matrix of shape " + std::to_string(A.rows()) + "x" +
                        std::to_string(A.cols()) +
                        " cannot be conjugated by a permutation of length " +
                        std::to_string(pi.size()));
  }
}

}  // namespace

Matrix conjugate_by_permutation(const Matrix& A, const Permutation& pi) {
  require_square_match(A, pi);
  const Index p = A.rows();
  Matrix out(p, p);
  for (Index j = 0; j < p; ++j) {
    for (Index i = 0; i < p; ++i) out(pi(i), pi(j)) = A(i, j);
  }
  return out;
}

Matrix unconjugate_by_permutation(const Matrix& A, const Permutation& pi) {
  require_square_match(A, pi);
  const Index p = A.rows();
  Matrix out(p, p);
  for (Index j = 0; j < p; ++j) {
    for (Index i = 0; i < p; ++i) out(i, j) = A(pi(i), pi(j));
  }
  return out;
}

Matrix precision_from_factors(const Matrix& T, const Vector& D) {
  if (T.rows() != T.cols() || T.rows() != D.size()) {
    throw ArgumentError("factor shapes do not agree");
  }
  if (D.size() > 0 && D.minCoeff() < kVarianceFloor) {
    throw Error("residual variance below floor reached reconstruction");
  }
  const Matrix scaled = D.cwiseInverse().asDiagonal() * T;
  const Matrix omega = T.transpose() * scaled;
  return 0.5 * (omega + omega.transpose());
}

PrecisionEstimate reconstruct_precision(const CholeskyPair& pair,
                                        Method method, EstimateMeta meta) {
  return PrecisionEstimate(precision_from_factors(pair.T, pair.D), method,
                           meta);
}

CholeskyPair mcd_exact(const Matrix& omega) {
  if (omega.rows() != omega.cols()) {
    throw ArgumentError("mcd_exact needs a square matrix");
  }
  const Index p = omega.rows();
  // Omega = U E U' with U unit upper triangular. Work from the last column.
  Matrix U = Matrix::Identity(p, p);
  Vector e(p);
  for (Index j = p - 1; j >= 0; --j) {
    double pivot = omega(j, j);
    for (Index k = j + 1; k < p; ++k) pivot -= U(j, k) * U(j, k) * e(k);
    if (!(pivot > 0.0)) {
      throw NotPositiveDefiniteError("non-positive pivot at index " +
                                     std::to_string(j));
    }
    e(j) = pivot;
    for (Index i = 0; i < j; ++i) {
      double s = omega(i, j);
      for (Index k = j + 1; k < p; ++k) s -= U(i, k) * U(j, k) * e(k);
      U(i, j) = s / pivot;
    }
  }
  return CholeskyPair{U.transpose(), e.cwiseInverse(), Permutation::identity(p),
                      Frame::kFitted};
}

double min_eigenvalue(const Matrix& A) {
  if (A.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> solver(A, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

Matrix center_columns(const Matrix& X) {
  if (X.rows() == 0) return X;
  const Eigen::RowVectorXd mean = X.colwise().mean();
  return X.rowwise() - mean;
}

}  // namespace permchol
