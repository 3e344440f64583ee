#include <doctest.h>

#include <cmath>

#include "permchol/baselines.hpp"
#include "permchol/errors.hpp"
#include "permchol/simulation.hpp"
#include "support.hpp"

using namespace permchol;
using permchol::testing::bitwise_equal;

namespace {

Vector sorted_eigenvalues(const Matrix& A) {
  Vector ev = Eigen::SelfAdjointEigenSolver<Matrix>(A).eigenvalues();
  std::sort(ev.data(), ev.data() + ev.size());
  return ev;
}

}  // namespace

TEST_SUITE("simulation") {

TEST_CASE("model structures") {
  Matrix m1(4, 4);
  m1 << 1, .5, .3, 0, .5, 1, .5, .3, .3, .5, 1, .5, 0, .3, .5, 1;
  CHECK(make_model({1, 4, 0}) == m1);

  const Matrix m5 = make_model({5, 3, 0});
  CHECK(m5(0, 0) == doctest::Approx(1.0 / 3.0));
  CHECK(m5(1, 1) == doctest::Approx(0.5));
  CHECK(m5(2, 2) == 1.0);
  CHECK(m5(0, 1) == 0.0);

  Matrix m6(2, 2);
  m6 << 164, -80, -80, 100;
  CHECK((make_model({6, 2, 0}) - m6).norm() <= 1e-10);

  const Matrix m3 = make_model({3, 12, 0});
  CHECK(m3(0, 9) == 0.5);
  CHECK(m3(0, 10) == 0.0);
  CHECK(m3(11, 11) == 1.0);
  CHECK(m3(4, 4) == 1.0);

  const Matrix m4 = make_model({4, 5, 0});
  CHECK(m4(0, 3) == doctest::Approx(0.125));

  CHECK_THROWS_AS(make_model({3, 9, 0}), ArgumentError);
  CHECK_THROWS_AS(make_model({7, 10, 0}), ArgumentError);
  CHECK_THROWS_AS(make_model({1, 1, 0}), ArgumentError);
}

TEST_CASE("every model is positive definite") {
  for (int id = 1; id <= 6; ++id) {
    for (Index p : {10, 30, 60}) {
      CHECK(min_eigenvalue(make_model({id, p, 3})) > 0.0);
    }
  }
}

TEST_CASE("model 2 permutes model 1") {
  const Matrix m1 = make_model({1, 20, 0});
  const Matrix m2 = make_model({2, 20, 5});
  CHECK((sorted_eigenvalues(m1) - sorted_eigenvalues(m2)).cwiseAbs().maxCoeff() <=
        1e-10);
  CHECK(m2 == conjugate_by_permutation(m1, model2_permutation(20, 5)));
  CHECK(m2 == make_model({2, 20, 5}));
  CHECK(m2 != make_model({2, 20, 6}));
}

TEST_CASE("sampler") {
  const Matrix omega = make_model({4, 3, 0});
  const Matrix X = sample_mvn(omega, 7, 1);
  CHECK(X.rows() == 7);
  CHECK(X.cols() == 3);
  CHECK(bitwise_equal(X, sample_mvn(omega, 7, 1)));
  CHECK_FALSE(bitwise_equal(X, sample_mvn(omega, 7, 2)));

  const Matrix big = sample_mvn(Matrix::Identity(2, 2), 10000, 3);
  CHECK((sample_covariance(big) - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() <
        0.1);

  Matrix indefinite(2, 2);
  indefinite << 1, 2, 2, 1;
  CHECK_THROWS_AS(sample_mvn(indefinite, 5, 0), NotPositiveDefiniteError);

  const Matrix sigma = make_model({1, 6, 0}).inverse();
  double previous = std::numeric_limits<double>::infinity();
  for (Index n : {100, 1000, 10000}) {
    double total = 0.0;
    for (std::uint64_t s = 0; s < 10; ++s) {
      total += (sample_covariance(sample_mvn(make_model({1, 6, 0}), n, 50 + s)) -
                sigma).norm();
    }
    CHECK(total / 10.0 < previous);
    previous = total / 10.0;
  }

  const Matrix centered = center_columns(sample_mvn(omega, 30, 4));
  CHECK(centered.colwise().mean().cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("summaries") {
  const LossSummary one = summarize({2.0});
  CHECK(one.mean == 2.0);
  CHECK_FALSE(one.se.has_value());
  const LossSummary many = summarize({1.0, 2.0, 3.0, 4.0});
  CHECK(many.mean == 2.5);
  CHECK(*many.se == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
  CHECK(summarize({}).count == 0);
}

TEST_CASE("experiment runner") {
  ExperimentConfig cfg;
  cfg.model = {1, 8, 0};
  cfg.n = 30;
  cfg.reps = 3;
  cfg.M = 4;
  cfg.methods = {Method::kM1, Method::kM2, Method::kAve, Method::kBicOrder,
                 Method::kDiagonal, Method::kSample};
  const ExperimentReport report = run_experiment(cfg);
  REQUIRE(report.methods.size() == 6);
  for (const auto& m : report.methods) {
    CHECK(m.failures == 0);
    CHECK(m.losses.size() == loss_names().size());
    CHECK(m.loss("fsl").count == 3);
    CHECK(m.loss("delta1").se.has_value());
  }

  // M1 of rep 0 is reproducible from the derived seeds.
  const Matrix X = center_columns(
      sample_mvn(report.omega_true, 30, rep_data_seed(0, 0)));
  const LossReport direct =
      loss_report(estimate_m1(X, 4, rep_estimator_seed(0, 0)), report.omega_true);
  CHECK(report.method(Method::kM1).per_rep[0]->mae == direct.mae);

  ExperimentConfig threaded = cfg;
  threaded.threads = 3;
  const ExperimentReport again = run_experiment(threaded);
  for (std::size_t k = 0; k < cfg.methods.size(); ++k) {
    for (std::size_t l = 0; l < loss_names().size(); ++l) {
      CHECK(again.methods[k].losses[l].mean == report.methods[k].losses[l].mean);
    }
  }

  cfg.reps = 1;
  cfg.methods = {Method::kM2};
  const ExperimentReport single = run_experiment(cfg);
  CHECK_FALSE(single.method(Method::kM2).loss("mae").se.has_value());
  CHECK_THROWS_AS(single.method(Method::kAve), ArgumentError);

  cfg.reps = 0;
  CHECK_THROWS_AS(run_experiment(cfg), ArgumentError);
}

TEST_CASE("failures are counted, not dropped") {
  ExperimentConfig cfg;
  cfg.model = {1, 12, 0};
  cfg.n = 8;  // n < p: the sample covariance is singular
  cfg.reps = 2;
  cfg.M = 3;
  cfg.methods = {Method::kSample, Method::kM1};
  const ExperimentReport report = run_experiment(cfg);
  CHECK(report.method(Method::kSample).failures == 2);
  CHECK(report.method(Method::kSample).failure_messages.size() == 2);
  CHECK(report.method(Method::kSample).loss("mae").count == 0);
  CHECK(report.method(Method::kM1).failures == 0);
}

}
