#pragma once

// Modified Cholesky machinery: variable-order permutations, the (T, D)
// factor pair, and the precision matrix Omega = T' D^{-1} T.

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "permchol/types.hpp"

namespace permchol {

/// A bijection on {0, ..., p-1}. Entry j holds pi(j): the original variable
/// that occupies position j of the order. The permutation matrix P_pi has a
/// single 1 at (pi(j), j) in column j; it is never materialized.
class Permutation {
 public:
  Permutation() = default;

  /// Throws ArgumentError unless `map` is a bijection on {0..p-1}.
  explicit Permutation(std::vector<Index> map);

  static Permutation identity(Index p);
  /// Accepts the conventional 1-based listing (pi(1), ..., pi(p)).
  static Permutation from_one_based(std::span<const Index> map);

  Index size() const noexcept { return static_cast<Index>(map_.size()); }
  Index operator()(Index j) const { return map_[static_cast<std::size_t>(j)]; }
  const std::vector<Index>& indices() const noexcept { return map_; }

  Permutation inverse() const;
  /// (this o other)(j) = this(other(j)).
  Permutation compose(const Permutation& other) const;
  bool is_identity() const noexcept;

  friend bool operator==(const Permutation&, const Permutation&) = default;

 private:
  std::vector<Index> map_;
};

/// Which coordinate system a CholeskyPair is expressed in.
enum class Frame {
  kFitted,    // permuted coordinates; T is lower triangular
  kOriginal,  // after back-transformation; T need not be triangular
};

/// Unit-diagonal factor T and residual variances D with Omega = T' D^{-1} T.
struct CholeskyPair {
  Matrix T;
  Vector D;
  Permutation order;
  Frame frame = Frame::kFitted;

  Index dim() const noexcept { return T.rows(); }
};

enum class Method { kM1, kM2, kAve, kBicOrder, kSample, kDiagonal, kSingleOrder };

std::string_view method_name(Method m);
/// Parses the short CLI spellings (m1, m2, ave, bic, sample, dlda/diagonal).
std::optional<Method> parse_method(std::string_view name);

struct EstimateMeta {
  int M = 0;
  double delta = 0.0;
  std::uint64_t seed = 0;
};

/// A symmetric precision matrix estimate. The constructor symmetrizes its
/// input as (A + A') / 2, so `omega()` is exactly symmetric.
class PrecisionEstimate {
 public:
  PrecisionEstimate(Matrix omega, Method method, EstimateMeta meta = {});

  const Matrix& omega() const noexcept { return omega_; }
  Method method() const noexcept { return method_; }
  const EstimateMeta& meta() const noexcept { return meta_; }
  Index dim() const noexcept { return omega_.rows(); }

 private:
  Matrix omega_;
  Method method_;
  EstimateMeta meta_;
};

/// Column j of the result is column pi(j) of X, i.e. X * P_pi.
Matrix apply_permutation(const Matrix& X, const Permutation& pi);

/// P_pi A P_pi': entry (pi(i), pi(j)) of the result is A(i, j).
Matrix conjugate_by_permutation(const Matrix& A, const Permutation& pi);

/// Inverse of conjugate_by_permutation: entry (i, j) is A(pi(i), pi(j)).
Matrix unconjugate_by_permutation(const Matrix& A, const Permutation& pi);

/// T' diag(1/D) T, symmetrized. Throws Error if any D entry is below the
/// variance floor (the floor must be applied where D is estimated).
Matrix precision_from_factors(const Matrix& T, const Vector& D);

PrecisionEstimate reconstruct_precision(const CholeskyPair& pair,
                                        Method method = Method::kSingleOrder,
                                        EstimateMeta meta = {});

/// Exact modified Cholesky factors of a symmetric positive-definite Omega
/// under the identity order, via a root-free U E U' sweep from the last
/// variable to the first (U = T', E = D^{-1}).
/// Throws NotPositiveDefiniteError on a non-positive pivot.
CholeskyPair mcd_exact(const Matrix& omega);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Matrix& A);

/// Subtracts each column's mean.
Matrix center_columns(const Matrix& X);

}  // namespace permchol
