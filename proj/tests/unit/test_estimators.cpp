#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "oneshot/errors.hpp"
#include "oneshot/estimators.hpp"
#include "test_support.hpp"

using namespace oneshot;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

ProjectionConfig exact() {
  ProjectionConfig cfg;
  cfg.method = ProjectionMethod::exact_linear;
  return cfg;
}

EstimatorSpec spec_of(EstimatorKind kind, ProjectionConfig proj = exact()) {
  EstimatorSpec s;
  s.kind = kind;
  s.projection = proj;
  return s;
}

}  // namespace

TEST_CASE("one_shot with a full-space generator returns the back-projection") {
  const VectorXd x = test::random_unit(12, 1);
  const auto e = sample_ensemble(x, 50, ObservationModel::noisy_cubic(1.0), 2);
  const Generator gen(LinearGenerator(MatrixXd::Identity(12, 12), 1e6));
  const auto r = one_shot(e, gen, exact());
  const VectorXd s = (1.0 / 50.0) * (e.a.transpose() * e.y);
  CHECK((r.estimate - s).norm() <= 1e-12 * s.norm());
  CHECK(r.projection_calls == 1);
  CHECK(r.restart_estimates.size() == 1);
}

TEST_CASE("one_shot in the large-m regime") {
  const MatrixXd b = random_orthonormal_columns(100, 5, 3);
  const Generator gen(LinearGenerator(b, 10.0));
  const VectorXd z = Rng(4).uniform_in_ball(5, 1.0);
  const VectorXd x = b * z / (b * z).norm();
  const auto e = sample_ensemble(x, 100000, ObservationModel::identity(0.0), 5);
  const auto r = one_shot(e, gen, exact());
  CHECK((r.estimate - x).norm() <= 0.05);
}

TEST_CASE("the first iterate of bipg and pgd equals one_shot") {
  const VectorXd x = test::random_unit(30, 6);
  const Generator lin(LinearGenerator(Rng(7).normal_matrix(30, 4), 3.0));
  const Generator mlp = make_random_mlp({4, 16, 30}, {Activation::tanh, Activation::none}, 2.0, 1.2, 8);

  const auto bits = sample_ensemble(x, 80, ObservationModel::noisy_one_bit(0.3), 9);
  const auto cubic = sample_ensemble(x, 80, ObservationModel::noisy_cubic(1.0), 9);

  EstimatorSpec b = spec_of(EstimatorKind::bipg);
  b.iterations = 1;
  EstimatorSpec p = spec_of(EstimatorKind::pgd);
  p.iterations = 1;
  CHECK((bipg(bits, lin, b).estimate - one_shot(bits, lin, exact()).estimate).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((pgd(cubic, lin, p).estimate - one_shot(cubic, lin, exact()).estimate).cwiseAbs().maxCoeff() <= 1e-12);

  ProjectionConfig adam;
  adam.restart_seed = 5;
  b.projection = adam;
  p.projection = adam;
  CHECK((bipg(bits, mlp, b).estimate - one_shot(bits, mlp, adam).estimate).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((pgd(cubic, mlp, p).estimate - one_shot(cubic, mlp, adam).estimate).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("bipg stays put at a consistent fixed point") {
  // Orthogonal rows: A A^T = 4 I, so x1 = A^T y / m has sign(A x1) = y and the residual vanishes.
  auto e = sample_ensemble(test::random_unit(6, 10), 4, ObservationModel::noisy_one_bit(0.0), 11);
  e.a = 2.0 * MatrixXd::Identity(4, 6);
  e.y = Eigen::Vector4d(1, -1, -1, 1);
  const Generator gen(LinearGenerator(MatrixXd::Identity(6, 6), 2.0));
  EstimatorSpec s = spec_of(EstimatorKind::bipg);
  s.iterations = 1;
  const auto one = bipg(e, gen, s);
  REQUIRE((e.a * one.estimate).unaryExpr([](double v) { return sign0(v); }) == e.y);
  s.iterations = 5;
  CHECK((bipg(e, gen, s).estimate - one.estimate).norm() == 0.0);
}

TEST_CASE("bipg rejects non-binary observations and T = 0") {
  const auto e = sample_ensemble(test::random_unit(5, 1), 20, ObservationModel::noisy_cubic(1.0), 1);
  const Generator gen(LinearGenerator(MatrixXd::Identity(5, 5), 1.0));
  CHECK_THROWS_AS(bipg(e, gen, spec_of(EstimatorKind::bipg)), ValidationError);
  EstimatorSpec s = spec_of(EstimatorKind::pgd);
  s.iterations = 0;
  CHECK_THROWS_AS(pgd(e, gen, s), ValidationError);
  s.iterations = 3;
  s.step_size = -1.0;
  CHECK_THROWS_AS(pgd(e, gen, s), ValidationError);
}

TEST_CASE("pgd residual is non-increasing for a small step") {
  const VectorXd x = test::random_unit(8, 12);
  const auto e = sample_ensemble(x, 30, ObservationModel::identity(0.2), 13);
  const Generator gen(LinearGenerator(MatrixXd::Identity(8, 8), 1e6));
  EstimatorSpec s = spec_of(EstimatorKind::pgd);
  const double norm_a = Eigen::JacobiSVD<MatrixXd>(e.a).singularValues()(0);
  s.step_size = 1.0 / (norm_a * norm_a);
  s.iterations = 200;
  const auto r = pgd(e, gen, s);
  REQUIRE(r.iterate_history.size() == 200);
  for (std::size_t t = 1; t < r.iterate_history.size(); ++t)
    CHECK(r.iterate_history[t] <= r.iterate_history[t - 1] * (1 + 1e-12));
  // Oracle: the least-squares solution.
  const VectorXd ls = e.a.colPivHouseholderQr().solve(e.y);
  CHECK((r.estimate - ls).norm() <= 0.05 * ls.norm());
}

TEST_CASE("bipg and pgd histories track the error to mu x when mu is given") {
  const VectorXd x = test::random_unit(10, 14);
  const auto e = sample_ensemble(x, 60, ObservationModel::noisy_cubic(0.5), 15);
  const Generator gen(LinearGenerator(MatrixXd::Identity(10, 10), 10.0));
  EstimatorSpec s = spec_of(EstimatorKind::pgd);
  s.iterations = 4;
  const auto r = pgd(e, gen, s, 3.0);
  REQUIRE(r.iterate_history.size() == 4);
  CHECK(r.iterate_history.back() == doctest::Approx((r.estimate - 3.0 * x).norm()));
  CHECK(r.projection_calls == 4);
}

TEST_CASE("csgm fits a planted noiseless linear instance") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const Generator gen(LinearGenerator(Rng(seed + 9).normal_matrix(10, 3) / std::sqrt(10.0), 1.0));
    const VectorXd w = gen.forward(Rng(seed + 50).uniform_in_ball(3, 0.5));
    auto e = sample_ensemble(w / w.norm(), 60, ObservationModel::identity(0.0), seed);
    e.y = e.a * w;
    EstimatorSpec s = spec_of(EstimatorKind::csgm, ProjectionConfig{});
    s.projection.steps = 300;
    s.projection.restart_seed = seed;
    const auto r = csgm(e, gen, s);
    double best = r.iterate_history.front();
    for (double v : r.iterate_history) best = std::min(best, v);
    CHECK(best <= 1e-6);
    CHECK((r.estimate - gen.forward(*r.latent)).norm() <= 1e-8);

    const auto again = csgm(e, gen, s);
    CHECK(again.estimate == r.estimate);
  }
}

TEST_CASE("lasso_ista") {
  SUBCASE("no shrinkage solves the overdetermined system") {
    const VectorXd x = test::random_unit(6, 16);
    const auto e = sample_ensemble(x, 40, ObservationModel::identity(0.0), 17);
    EstimatorSpec s = spec_of(EstimatorKind::lasso_ista);
    s.shrinkage = 0.0;
    s.ista_iters = 5000;
    const auto r = lasso_ista(e, s);
    CHECK((e.a * r.estimate - e.y).norm() <= 1e-6);
    CHECK((r.estimate - x).norm() <= 1e-6);
  }
  SUBCASE("huge shrinkage gives zero") {
    const auto e = sample_ensemble(test::random_unit(6, 18), 40, ObservationModel::noisy_cubic(1.0), 19);
    EstimatorSpec s = spec_of(EstimatorKind::lasso_ista);
    s.shrinkage = 1e6;
    CHECK(lasso_ista(e, s).estimate.isZero(0.0));
  }
  SUBCASE("objective is monotone") {
    const auto e = sample_ensemble(test::random_unit(50, 20), 30, ObservationModel::noisy_cubic(1.0), 21);
    const auto r = lasso_ista(e, spec_of(EstimatorKind::lasso_ista));
    REQUIRE(r.iterate_history.size() == 500);
    for (std::size_t t = 1; t < r.iterate_history.size(); ++t)
      CHECK(r.iterate_history[t] <= r.iterate_history[t - 1] * (1 + 1e-12) + 1e-15);
  }
}

TEST_CASE("generative estimates are witnessed by their latent") {
  const Generator gen = make_random_mlp({4, 16, 30}, {Activation::tanh, Activation::none}, 2.0, 1.2, 22);
  const auto e = sample_ensemble(test::random_unit(30, 23), 50, ObservationModel::noisy_cubic(1.0), 24);
  for (auto kind : {EstimatorKind::one_shot, EstimatorKind::pgd, EstimatorKind::csgm}) {
    EstimatorSpec s = spec_of(kind, ProjectionConfig{});
    s.iterations = 3;
    s.projection.restarts = 3;
    const auto r = recover(e, &gen, s);
    REQUIRE(r.latent);
    CHECK((r.estimate - gen.forward(*r.latent)).norm() <= 1e-8);
    CHECK(r.estimate.allFinite());
  }
  CHECK_THROWS_AS(recover(e, nullptr, spec_of(EstimatorKind::one_shot)), ValidationError);
  CHECK_NOTHROW(recover(e, nullptr, spec_of(EstimatorKind::lasso_ista)));
}

TEST_CASE("estimators check dimensions") {
  const auto e = sample_ensemble(test::random_unit(5, 1), 20, ObservationModel::noisy_cubic(1.0), 1);
  const Generator gen(LinearGenerator(MatrixXd::Identity(6, 6), 1.0));
  CHECK_THROWS_AS(one_shot(e, gen, exact()), ValidationError);
  CHECK(parse_estimator_kind("lasso") == EstimatorKind::lasso_ista);
  CHECK_THROWS_AS(parse_estimator_kind("omp"), ValidationError);
}
