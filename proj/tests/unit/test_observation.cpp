#include <doctest.h>

#include <cmath>
#include <numbers>

#include "oneshot/errors.hpp"
#include "oneshot/observation.hpp"
#include "test_support.hpp"

using namespace oneshot;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Closed forms: one-bit E[sign(g + s e) g] = sqrt(2 / (pi (1 + s^2))),
// cubic moments from E g^{2j} = (2j-1)!!.
std::array<double, 4> one_bit_exact(double s) {
  const double mu = std::sqrt(2.0 / (std::numbers::pi * (1.0 + s * s)));
  return {mu, 1.0, 1.0 - mu * mu, 0.0};
}

std::array<double, 4> cubic_exact(double s) {
  const double s2 = s * s;
  // E g^6 = 15, E g^8 = 105, E g^12 = 10395
  const double xi_sq = 15.0 + s2;
  const double rho_sq = 105.0 + s2 - 9.0;
  // E (g^3 + s e)^4 = E g^12 + 6 s^2 E g^6 + 3 s^4
  const double e4 = 10395.0 + 6.0 * s2 * 15.0 + 3.0 * s2 * s2;
  return {3.0, xi_sq, rho_sq, e4 - xi_sq * xi_sq};
}

void check_within_se(const SimParameters& p, const std::array<double, 4>& exact) {
  REQUIRE(p.std_errors);
  const std::array<double, 4> got = {p.mu, p.xi_sq, p.rho_sq, p.theta_4};
  for (int i = 0; i < 4; ++i) CHECK(std::abs(got[i] - exact[i]) <= 3.0 * (*p.std_errors)[i] + 1e-12);
}

}  // namespace

TEST_CASE("observation maps on hand-checked inputs") {
  Rng noise(1);
  CHECK(ObservationModel::noisy_one_bit(0.0).observe(0.7, noise) == 1.0);
  CHECK(ObservationModel::noisy_cubic(0.0).observe(2.0, noise) == 8.0);
  CHECK(ObservationModel::noisy_one_bit(0.0).observe(0.0, noise) == 0.0);
  // a = (1, 0), x = (1, 0), e = (-2, 0): <a, x + e> = -1
  CHECK(ObservationModel(ModelKind::one_bit_signal_noise, 1.0).observe(-1.0, noise) == -1.0);
}

TEST_CASE("identity model without noise gives y = A x") {
  const VectorXd x = test::random_unit(30, 2);
  const MeasurementEnsemble e = sample_ensemble(x, 40, ObservationModel::identity(0.0), 3);
  CHECK((e.y - e.a * x).cwiseAbs().maxCoeff() == 0.0);
  CHECK(e.m() == 40);
  CHECK(e.n() == 30);
}

TEST_CASE("ensembles are reproducible and share A across models") {
  const VectorXd x = test::random_unit(10, 4);
  const MeasurementEnsemble a = sample_ensemble(x, 25, ObservationModel::noisy_cubic(1.0), 77);
  const MeasurementEnsemble b = sample_ensemble(x, 25, ObservationModel::noisy_cubic(1.0), 77);
  CHECK(a.a == b.a);
  CHECK(a.y == b.y);
  const MeasurementEnsemble c = sample_ensemble(x, 25, ObservationModel::noisy_one_bit(0.0), 77);
  CHECK(c.a == a.a);
  CHECK(sample_ensemble(x, 25, ObservationModel::noisy_cubic(1.0), 78).a != a.a);
}

TEST_CASE("sample_ensemble validates its inputs") {
  CHECK_THROWS_AS(sample_ensemble(VectorXd::Ones(3), 5, ObservationModel::identity(), 1), ValidationError);
  CHECK_THROWS_AS(sample_ensemble(test::random_unit(3, 1), 0, ObservationModel::identity(), 1), ValidationError);
  CHECK_THROWS_AS(ObservationModel::noisy_cubic(-1.0), ValidationError);
}

TEST_CASE("one-bit observations are signs") {
  const MeasurementEnsemble e = sample_ensemble(test::random_unit(8, 5), 500, ObservationModel::noisy_one_bit(0.5), 6);
  for (Eigen::Index i = 0; i < e.y.size(); ++i) CHECK((e.y(i) == 1.0 || e.y(i) == -1.0));
}

TEST_CASE("signal-noise kinds at sigma 0 reproduce the standard models") {
  const VectorXd x = test::random_unit(12, 7);
  const auto a = sample_ensemble(x, 30, ObservationModel(ModelKind::one_bit_signal_noise, 0.0), 9);
  const auto b = sample_ensemble(x, 30, ObservationModel::noisy_one_bit(0.0), 9);
  CHECK(a.a == b.a);
  CHECK(a.y == b.y);
  const auto c = sample_adversarial_ensemble(x, 30, ObservationModel(ModelKind::cubic_signal_noise, 0.0), 9);
  const auto d = sample_ensemble(x, 30, ObservationModel::noisy_cubic(0.0), 9);
  CHECK(c.y == d.y);
}

TEST_CASE("signal-noise inner products have variance 1 + n sigma^2") {
  const int n = 4;
  const double sigma = 0.5;
  const int rows = 100000;
  const auto e = sample_ensemble(test::random_unit(n, 8), rows, ObservationModel(ModelKind::cubic_signal_noise, sigma), 10);
  // Per row, <a, x + e> given a is N(<a,x>, sigma^2 ||a||^2); unconditionally its variance is 1 + n sigma^2.
  double s1 = 0, s2 = 0, s4 = 0;
  for (int i = 0; i < rows; ++i) {
    const double v = std::cbrt(e.y(i));
    s1 += v;
    s2 += v * v;
    s4 += v * v * v * v;
  }
  const double mean = s1 / rows, var = s2 / rows - mean * mean, m4 = s4 / rows;
  const double se = std::sqrt((m4 - var * var) / rows);
  CHECK(std::abs(var - (1.0 + n * sigma * sigma)) <= 3.0 * se);
}

TEST_CASE("bounded corruption binds the budget") {
  const auto e = sample_ensemble(test::random_unit(5, 1), 60, ObservationModel::noisy_cubic(1.0), 2);
  CHECK(apply_bounded_corruption(e, 0.0, 3).y == e.y);

  MeasurementEnsemble small = e;
  small.a = MatrixXd::Identity(4, 5);
  small.y = Eigen::Vector4d(1, -1, 1, 1);
  const auto c = apply_bounded_corruption(small, 1.0, 3);
  CHECK((c.y - small.y - Eigen::Vector4d(1, -1, 1, 1)).norm() < 1e-15);
  CHECK(c.corruption_budget == 1.0);

  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto base = sample_ensemble(test::random_unit(6, seed), 17 + seed, ObservationModel::identity(0.3), seed);
    const double nu = 0.05 * static_cast<double>(seed);
    const auto cor = apply_bounded_corruption(base, nu, seed);
    CHECK(std::abs((cor.y - base.y).norm() / std::sqrt(double(base.m())) - nu) <= 1e-12);
  }

  MeasurementEnsemble zero = e;
  zero.y.setZero();
  const auto z = apply_bounded_corruption(zero, 0.5, 4);
  CHECK(z.y.norm() == doctest::Approx(0.5 * std::sqrt(60.0)).epsilon(1e-12));
}

TEST_CASE("analytic parameters") {
  const SimParameters id = sim_parameters(ObservationModel::identity(0.0), ParameterMethod::analytic);
  CHECK(id.mu == 1.0);
  CHECK(id.xi_sq == 1.0);
  CHECK(id.rho_sq == 2.0);
  CHECK(id.theta_4 == 2.0);

  const SimParameters ob = sim_parameters(ObservationModel::noisy_one_bit(0.5), ParameterMethod::analytic);
  CHECK(ob.mu == doctest::Approx(0.71365).epsilon(1e-5));
  const auto exact = one_bit_exact(0.5);
  CHECK(ob.mu == doctest::Approx(exact[0]).epsilon(1e-15));
  CHECK(ob.rho_sq == doctest::Approx(exact[2]).epsilon(1e-15));
  CHECK(ob.theta_4 == 0.0);

  const SimParameters cu = sim_parameters(ObservationModel::noisy_cubic(1.0), ParameterMethod::analytic);
  CHECK(cu.mu == 3.0);
  CHECK(cu.xi_sq == 16.0);
  CHECK(cu.rho_sq == 97.0);
  CHECK(cu.theta_4 == 10232.0);
  const auto cubic = cubic_exact(1.0);
  CHECK(cu.theta_4 == doctest::Approx(cubic[3]));

  CHECK_THROWS_AS(sim_parameters(ObservationModel(ModelKind::one_bit_signal_noise, 0.5), ParameterMethod::analytic),
                  ValidationError);
}

TEST_CASE("Monte Carlo parameters agree with the closed forms within 3 s.e.") {
  SimParameterOptions opt;
  opt.samples = 1'000'000;
  check_within_se(sim_parameters(ObservationModel::noisy_one_bit(0.5), ParameterMethod::monte_carlo, opt),
                  one_bit_exact(0.5));
  check_within_se(sim_parameters(ObservationModel::noisy_cubic(1.0), ParameterMethod::monte_carlo, opt),
                  cubic_exact(1.0));
  // identity, sigma = 0: rho^2 = theta^4 = Var(g^2) = E g^4 - 1 = 2
  check_within_se(sim_parameters(ObservationModel::identity(0.0), ParameterMethod::monte_carlo, opt),
                  {1.0, 1.0, 2.0, 2.0});
}

TEST_CASE("quadrature parameters agree with the closed forms") {
  for (double s : {0.0, 1.0, 2.0}) {
    const SimParameters q = sim_parameters(ObservationModel::noisy_cubic(s), ParameterMethod::quadrature);
    const auto exact = cubic_exact(s);
    CHECK(q.mu == doctest::Approx(exact[0]).epsilon(1e-10));
    CHECK(q.xi_sq == doctest::Approx(exact[1]).epsilon(1e-10));
    CHECK(q.rho_sq == doctest::Approx(exact[2]).epsilon(1e-10));
    CHECK(q.theta_4 == doctest::Approx(exact[3]).epsilon(1e-10));
  }
  // The conditional mean erf(g / (sigma sqrt 2)) is smooth for sigma > 0.
  for (double s : {0.5, 1.0}) {
    const SimParameters q = sim_parameters(ObservationModel::noisy_one_bit(s), ParameterMethod::quadrature);
    CHECK(q.mu == doctest::Approx(one_bit_exact(s)[0]).epsilon(1e-6));
    CHECK(q.xi_sq == doctest::Approx(1.0).epsilon(1e-12));
  }
  // At sigma = 0 the integrand |g| has a kink, so the rule converges slowly.
  const SimParameters q0 = sim_parameters(ObservationModel::noisy_one_bit(0.0), ParameterMethod::quadrature);
  CHECK(q0.mu == doctest::Approx(one_bit_exact(0.0)[0]).epsilon(1e-2));
}

TEST_CASE("property: constructed parameters satisfy mu^2 <= xi^2") {
  for (double s : {0.0, 0.3, 1.0, 3.0}) {
    for (auto model : {ObservationModel::noisy_one_bit(s), ObservationModel::noisy_cubic(s), ObservationModel::identity(s)}) {
      for (auto method : {ParameterMethod::analytic, ParameterMethod::quadrature}) {
        const SimParameters p = sim_parameters(model, method);
        CHECK(p.mu * p.mu <= p.xi_sq * (1 + 1e-12));
        CHECK(p.rho_sq >= 0.0);
        CHECK(p.theta_4 >= 0.0);
      }
    }
  }
}

TEST_CASE("signal-noise parameters follow the effective noise level") {
  // sign(<a, x + e>) with n-dimensional e: given a, the noise level is sigma ||a||.
  SimParameterOptions opt;
  opt.samples = 400000;
  opt.ambient_dim = 1;
  const SimParameters p = sim_parameters(ObservationModel(ModelKind::one_bit_signal_noise, 0.5),
                                         ParameterMethod::monte_carlo, opt);
  // n = 1: y = sign(g (1 + e)), so mu = E|g| (2 P(e > -1) - 1) with e ~ N(0, 0.25).
  const double p_pos = 0.5 * std::erfc(-2.0 / std::sqrt(2.0));
  const double exact = std::sqrt(2.0 / std::numbers::pi) * (2.0 * p_pos - 1.0);
  CHECK(std::abs(p.mu - exact) <= 3.0 * (*p.std_errors)[0]);
  CHECK_THROWS_AS(sim_parameters(ObservationModel(ModelKind::one_bit_signal_noise, 0.5), ParameterMethod::monte_carlo),
                  ValidationError);
}

TEST_CASE("assumption checks") {
  const SimAssumptionReport one_bit = validate_sim_assumptions(ObservationModel::noisy_one_bit(1.0));
  CHECK(one_bit.mu_nonzero);
  CHECK(one_bit.mu_hat == doctest::Approx(1.0 / std::sqrt(std::numbers::pi)).epsilon(0.02));

  const SimAssumptionReport id = validate_sim_assumptions(ObservationModel::identity(0.0));
  CHECK(id.passes());

  const ObservationModel square =
      ObservationModel::custom({[](double g) { return g * g; }, nullptr, "square"}, CustomCheck::skip);
  const SimAssumptionReport sq = validate_sim_assumptions(square);
  CHECK_FALSE(sq.mu_nonzero);
  CHECK_FALSE(sq.passes());
  CHECK_THROWS_AS(ObservationModel::custom({[](double g) { return g * g; }, nullptr, "square"}), ValidationError);

  const ObservationModel tanh_model = ObservationModel::custom({[](double g) { return std::tanh(g); }, nullptr, "tanh"});
  CHECK(tanh_model.kind() == ModelKind::custom);
}
