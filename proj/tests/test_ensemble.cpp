#include <doctest.h>

#include <cmath>

#include "permchol/baselines.hpp"
#include "permchol/ensemble.hpp"
#include "permchol/errors.hpp"
#include "permchol/metrics.hpp"
#include "permchol/simulation.hpp"
#include "support.hpp"

using namespace permchol;
using permchol::testing::bitwise_equal;
using permchol::testing::random_matrix;
using permchol::testing::random_permutation;

namespace {

Matrix model_data(int model, Index p, Index n, std::uint64_t seed) {
  return center_columns(sample_mvn(make_model({model, p, 0}), n, seed));
}

long long offdiag_nonzeros(const Matrix& A) {
  long long count = 0;
  for (Index j = 0; j < A.cols(); ++j) {
    for (Index i = 0; i < A.rows(); ++i) count += (i != j && A(i, j) != 0.0);
  }
  return count;
}

// Quantiles at probabilities l/(H+1) with linear interpolation between order
// statistics (the "type 7" rule).
std::vector<double> oracle_grid(const Matrix& T, int H) {
  std::vector<double> v;
  for (Index j = 0; j < T.cols(); ++j) {
    for (Index i = 0; i < T.rows(); ++i) {
      if (i != j && T(i, j) != 0.0) v.push_back(std::abs(T(i, j)));
    }
  }
  std::sort(v.begin(), v.end());
  std::vector<double> grid{0.0};
  for (int l = 1; l <= H && !v.empty(); ++l) {
    const double pos = (static_cast<double>(v.size()) - 1.0) * l / (H + 1);
    const auto lo = static_cast<std::size_t>(pos);
    const double w = pos - static_cast<double>(lo);
    grid.push_back(lo + 1 < v.size() ? (1 - w) * v[lo] + w * v[lo + 1] : v[lo]);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

}  // namespace

TEST_SUITE("ensemble") {

TEST_CASE("permutation draws are reproducible bijections") {
  const auto a = draw_permutations(12, 20, 5);
  const auto b = draw_permutations(12, 20, 5);
  CHECK(a == b);
  CHECK(a != draw_permutations(12, 20, 6));
  for (const auto& pi : a) CHECK(pi.size() == 12);
  CHECK_THROWS_AS(draw_permutations(12, 0, 5), ArgumentError);
}

TEST_CASE("single-order fit examples") {
  std::mt19937_64 rng(20);
  const Matrix one = center_columns(random_matrix(40, 1, rng));
  const CholeskyPair p1 = fit_single_order(one, Permutation::identity(1), {});
  CHECK(p1.T == Matrix::Identity(1, 1));
  CHECK(p1.D(0) == doctest::Approx(one.col(0).squaredNorm() / 40.0));

  const Matrix X = center_columns(random_matrix(5000, 4, rng));
  const CholeskyPair id = fit_single_order(X, Permutation::identity(4), {});
  CHECK((id.T - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff() <= 0.1);
  CHECK((id.D.array() - 1.0).abs().maxCoeff() <= 0.15);
  for (Index i = 0; i < 4; ++i) {
    CHECK(id.T(i, i) == 1.0);
    for (Index j = i + 1; j < 4; ++j) CHECK(id.T(i, j) == 0.0);
  }

  Matrix Y = random_matrix(5000, 2, rng);
  Y.col(1) = 0.5 * Y.col(0) + Y.col(1);
  const CholeskyPair reg =
      fit_single_order(center_columns(Y), Permutation::identity(2), {});
  CHECK(reg.T(1, 0) == doctest::Approx(-0.5).epsilon(0.2));
  CHECK(std::abs(reg.T(1, 0) + 0.5) <= 0.1);

  CHECK_THROWS_AS(fit_single_order(X.topRows(1), Permutation::identity(4), {}),
                  ArgumentError);
}

TEST_CASE("back-transformation") {
  std::mt19937_64 rng(21);
  const Matrix X = model_data(4, 6, 60, 1);
  const Permutation pi = random_permutation(6, rng);
  const CholeskyPair fitted = fit_single_order(X, pi, {});
  const CholeskyPair back = back_transform(fitted, pi);
  CHECK(back.T.diagonal() == Vector::Ones(6));
  const Matrix lhs = reconstruct_precision(back).omega();
  const Matrix rhs =
      conjugate_by_permutation(reconstruct_precision(fitted).omega(), pi);
  CHECK((lhs - rhs).norm() <= 1e-10);

  const CholeskyPair same = back_transform(fitted, Permutation::identity(6));
  CHECK(same.T == fitted.T);
  CHECK(same.D == fitted.D);
  CHECK_THROWS_AS(back_transform(fitted, Permutation::identity(5)), ArgumentError);

  // Fitting under pi equals fitting the permuted data under the identity.
  CvConfig cv;
  const CholeskyPair direct =
      fit_single_order(apply_permutation(X, pi), Permutation::identity(6), cv);
  CHECK((direct.T - fitted.T).norm() <= 1e-10);
}

TEST_CASE("ensemble reductions") {
  const Matrix X = model_data(1, 8, 50, 2);
  const std::uint64_t seed = 17;

  CvConfig cv;
  cv.seed = fold_seed(seed);
  const CholeskyPair single = fit_single_order(X, Permutation::identity(8), cv);
  const EnsembleState one =
      ensemble_fit(X, std::vector<Permutation>{Permutation::identity(8)}, seed);
  CHECK(bitwise_equal(one.T_tilde, single.T));
  CHECK(bitwise_equal(one.D_tilde, single.D));

  std::mt19937_64 rng(22);
  const Permutation pi = random_permutation(8, rng);
  const EnsembleState repeated =
      ensemble_fit(X, std::vector<Permutation>(4, pi), seed);
  const CholeskyPair once = back_transform(fit_single_order(X, pi, cv), pi);
  CHECK((repeated.T_tilde - once.T).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK((repeated.D_tilde - once.D).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("determinism across calls and thread counts") {
  const Matrix X = model_data(2, 10, 40, 3);
  EnsembleOptions serial;
  EnsembleOptions threaded;
  threaded.threads = 4;
  const EnsembleState a = ensemble_fit(X, 12, 9, serial);
  const EnsembleState b = ensemble_fit(X, 12, 9, serial);
  const EnsembleState c = ensemble_fit(X, 12, 9, threaded);
  CHECK(bitwise_equal(a.T_tilde, b.T_tilde));
  CHECK(bitwise_equal(a.D_tilde, b.D_tilde));
  CHECK(bitwise_equal(a.T_tilde, c.T_tilde));
  CHECK(bitwise_equal(a.D_tilde, c.D_tilde));
  CHECK(a.orders == draw_permutations(10, 12, 9));
  CHECK(a.T_tilde.diagonal() == Vector::Ones(10));
  CHECK(a.D_tilde.minCoeff() >= kVarianceFloor);
  CHECK(bitwise_equal(estimate_m2(X, 12, 9, serial).omega(),
                      estimate_m2(X, 12, 9, threaded).omega()));
}

TEST_CASE("hard thresholding") {
  Matrix T = Matrix::Identity(3, 3);
  T(1, 0) = 0.4;
  T(2, 1) = -0.05;
  T(0, 2) = 0.2;
  CHECK(hard_threshold(T, 0.0) == T);
  const Matrix cut = hard_threshold(T, 0.1);
  CHECK(cut(1, 0) == 0.4);
  CHECK(cut(2, 1) == 0.0);
  CHECK(cut(0, 2) == 0.2);
  CHECK(hard_threshold(T, 0.4) == Matrix::Identity(3, 3));
  CHECK(hard_threshold(T, 5.0).diagonal() == Vector::Ones(3));
}

TEST_CASE("BIC score") {
  const Matrix I = Matrix::Identity(2, 2);
  CHECK(bic_score(I, I, 50) == doctest::Approx(2.1565).epsilon(1e-4));
  CHECK(std::abs(bic_score(I, I, 50) - (2.0 + 2.0 * std::log(50.0) / 50.0)) <=
        1e-12);

  std::mt19937_64 rng(23);
  const Matrix S = permchol::testing::random_spd(4, rng);
  const Matrix inv = S.inverse();
  const double fit_only = bic_score(inv, S, 30) - 10.0 * std::log(30.0) / 30.0;
  CHECK(fit_only == doctest::Approx(std::log(S.determinant()) + 4.0));

  Matrix sparse = Matrix::Identity(4, 4) * 2.0;
  Matrix denser = sparse;
  denser(0, 1) = denser(1, 0) = 0.1;
  denser(2, 3) = denser(3, 2) = 0.1;
  // Same fit term up to the added entries' trace contribution.
  const Matrix Sd = Matrix::Identity(4, 4);
  const double gap = bic_score(denser, Sd, 40) - bic_score(sparse, Sd, 40);
  const double fit_gap =
      -std::log(denser.determinant()) + std::log(sparse.determinant());
  CHECK(gap - fit_gap == doctest::Approx(2.0 * std::log(40.0) / 40.0));

  Matrix indefinite(2, 2);
  indefinite << 1, 2, 2, 1;
  CHECK_THROWS_AS(bic_score(indefinite, I, 10), SingularEstimateError);
}

TEST_CASE("threshold grid and selection") {
  const Matrix X = model_data(1, 10, 50, 4);
  const EnsembleState state = ensemble_fit(X, 10, 4);
  const auto grid = threshold_grid(state.T_tilde, 50);
  const auto oracle = oracle_grid(state.T_tilde, 50);
  REQUIRE(grid.size() == oracle.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(grid[i] == doctest::Approx(oracle[i]).epsilon(1e-14));
  }
  CHECK(threshold_grid(state.T_tilde, 0) == std::vector<double>{0.0});
  CHECK(grid.back() < (state.T_tilde - Matrix::Identity(10, 10)).cwiseAbs().maxCoeff());

  Matrix T = Matrix::Identity(3, 3);
  T(1, 0) = -1.0;
  T(2, 0) = 2.0;
  T(2, 1) = 4.0;
  CHECK(threshold_grid(T, 1) == std::vector<double>{0.0, 2.0});
  CHECK(threshold_grid(T, 3) == std::vector<double>{0.0, 1.5, 2.0, 3.0});

  const Matrix S = sample_covariance(X);
  const ThresholdSelection sel = select_threshold(state, S, 50, 50);
  CHECK(sel.grid == grid);
  REQUIRE(sel.bic_values.size() == grid.size());
  double best = std::numeric_limits<double>::infinity();
  for (const auto& b : sel.bic_values) {
    if (b) best = std::min(best, *b);
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (sel.bic_values[i] && *sel.bic_values[i] == best) {
      CHECK(sel.delta_opt >= grid[i]);
    }
  }
  const auto at = std::find(grid.begin(), grid.end(), sel.delta_opt);
  REQUIRE(at != grid.end());
  CHECK(*sel.bic_values[static_cast<std::size_t>(at - grid.begin())] == best);

  long long previous = std::numeric_limits<long long>::max();
  for (double delta : grid) {
    const Matrix Td = hard_threshold(state.T_tilde, delta);
    CHECK(Td.diagonal() == Vector::Ones(10));
    const long long nz = offdiag_nonzeros(Td);
    CHECK(nz <= previous);
    previous = nz;
  }

  const ThresholdSelection zero_only = select_threshold(state, S, 50, 0);
  CHECK(zero_only.grid == std::vector<double>{0.0});
  CHECK(zero_only.delta_opt == 0.0);

  EnsembleState diagonal = state;
  diagonal.T_tilde = Matrix::Identity(10, 10);
  const ThresholdSelection flat = select_threshold(diagonal, S, 50, 50);
  CHECK(flat.delta_opt == 0.0);
  for (const auto& b : flat.bic_values) CHECK(*b == *flat.bic_values.front());
}

TEST_CASE("M2 with delta forced to zero equals M1 bitwise") {
  const Matrix X = model_data(5, 12, 50, 5);
  const EnsembleState state = ensemble_fit(X, 8, 5);
  CHECK(bitwise_equal(m2_from_state(state, X, 0).omega(),
                      m1_from_state(state).omega()));
  CHECK(bitwise_equal(precision_at_threshold(state, 0.0, Method::kM2).omega(),
                      estimate_m1(X, 8, 5).omega()));
}

TEST_CASE("MCD-based estimates are symmetric PSD") {
  for (int model = 1; model <= 6; ++model) {
    const Matrix X = model_data(model, 12, 40, 10 + model);
    for (const auto& est :
         {estimate_m1(X, 6, 1), estimate_m2(X, 6, 1), estimate_ave(X, 6, 1),
          estimate_bic_order(X, 1)}) {
      CHECK(est.omega() == est.omega().transpose());
      CHECK(min_eigenvalue(est.omega()) >= -1e-10);
    }
  }
}

TEST_CASE("thresholding sparsifies on sparse models") {
  const Matrix omega5 = make_model({5, 30, 0});
  const Matrix X5 = center_columns(sample_mvn(omega5, 50, 6));
  const EnsembleState s5 = ensemble_fit(X5, 10, 6);
  CHECK(loss_report(m2_from_state(s5, X5), omega5).fsl_percent <
        loss_report(m1_from_state(s5), omega5).fsl_percent);

  const Matrix X1 = model_data(1, 30, 50, 7);
  const EnsembleState s1 = ensemble_fit(X1, 10, 7);
  CHECK(offdiag_nonzeros(m2_from_state(s1, X1).omega()) <
        offdiag_nonzeros(m1_from_state(s1).omega()));
}

TEST_CASE("relabeling equivariance with matched orders") {
  std::mt19937_64 rng(24);
  const Matrix X = model_data(4, 9, 45, 8);
  const Permutation sigma = random_permutation(9, rng);
  const Matrix Y = apply_permutation(X, sigma);
  const auto orders = draw_permutations(9, 7, 3);
  std::vector<Permutation> matched;
  for (const auto& pi : orders) matched.push_back(sigma.inverse().compose(pi));
  const Matrix on_x = m1_from_state(ensemble_fit(X, orders, 3)).omega();
  const Matrix on_y = m1_from_state(ensemble_fit(Y, matched, 3)).omega();
  CHECK((on_y - unconjugate_by_permutation(on_x, sigma)).cwiseAbs().maxCoeff() <=
        1e-9);
}

}
