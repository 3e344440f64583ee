#pragma once

#include <algorithm>
#include <cstring>
#include <random>

#include <Eigen/Dense>

#include "permchol/mcd.hpp"

namespace permchol::testing {

inline Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix A(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) A(i, j) = normal(rng);
  }
  return A;
}

// Well-conditioned SPD matrix: B B' / p + I.
inline Matrix random_spd(Index p, std::mt19937_64& rng) {
  const Matrix B = random_matrix(p, p, rng);
  Matrix A = B * B.transpose() / static_cast<double>(p) +
             Matrix::Identity(p, p);
  return 0.5 * (A + A.transpose());
}

inline Permutation random_permutation(Index p, std::mt19937_64& rng) {
  std::vector<Index> map(static_cast<std::size_t>(p));
  for (Index j = 0; j < p; ++j) map[static_cast<std::size_t>(j)] = j;
  std::shuffle(map.begin(), map.end(), rng);
  return Permutation(std::move(map));
}

inline bool bitwise_equal(const Matrix& A, const Matrix& B) {
  if (A.rows() != B.rows() || A.cols() != B.cols()) return false;
  for (Index j = 0; j < A.cols(); ++j) {
    for (Index i = 0; i < A.rows(); ++i) {
      if (std::memcmp(&A(i, j), &B(i, j), sizeof(double)) != 0) return false;
    }
  }
  return true;
}

}  // namespace permchol::testing
