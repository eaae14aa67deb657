#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include <Eigen/Dense>

#include "oneshot/linalg.hpp"
#include "oneshot/quadrature.hpp"
#include "oneshot/rng.hpp"

using namespace oneshot;
using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("mix64 and derive_seed do not collide on small index sets") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 100000; ++i) seen.insert(mix64(i));
  CHECK(seen.size() == 100000);

  std::set<std::uint64_t> paths;
  for (std::uint64_t a = 0; a < 50; ++a)
    for (std::uint64_t b = 0; b < 50; ++b) paths.insert(derive_seed(7, {a, b}));
  CHECK(paths.size() == 2500);
  CHECK(derive_seed(7, {1}) != derive_seed(8, {1}));
}

TEST_CASE("normals follow the documented Box-Muller transform") {
  std::mt19937_64 ref(42);
  auto u = [&] { return (static_cast<double>(ref() >> 11) + 0.5) * 0x1.0p-53; };
  Rng rng(42);
  for (int pair = 0; pair < 5; ++pair) {
    const double u1 = u(), u2 = u();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    CHECK(rng.normal() == radius * std::cos(2.0 * std::numbers::pi * u2));
    CHECK(rng.normal() == radius * std::sin(2.0 * std::numbers::pi * u2));
  }
}

TEST_CASE("identical seeds reproduce identical streams") {
  Rng a(99), b(99);
  CHECK(a.normal_matrix(7, 3) == b.normal_matrix(7, 3));
  CHECK(a.uniform() == b.uniform());
}

TEST_CASE("normal_matrix fills row-major") {
  Rng a(5), b(5);
  const MatrixXd m = a.normal_matrix(3, 4);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) CHECK(m(i, j) == b.normal());
}

TEST_CASE("uniforms stay inside the open unit interval and normals have unit variance") {
  Rng rng(3);
  const int n = 200000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = rng.uniform();
    REQUIRE(v > 0.0);
    REQUIRE(v < 1.0);
    const double g = rng.normal();
    sum += g;
    sum_sq += g * g;
  }
  CHECK(std::abs(sum / n) < 5.0 / std::sqrt(n));
  // Var(g^2) = 2
  CHECK(std::abs(sum_sq / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
}

TEST_CASE("uniform_in_ball respects the radius and the volume law") {
  Rng rng(11);
  const int n = 20000, k = 3;
  int inner = 0;
  for (int i = 0; i < n; ++i) {
    const VectorXd z = rng.uniform_in_ball(k, 2.0);
    REQUIRE(z.norm() <= 2.0 + 1e-12);
    inner += z.norm() <= 1.0;
  }
  const double p = 1.0 / 8.0;
  CHECK(std::abs(inner / double(n) - p) < 4.0 * std::sqrt(p * (1 - p) / n));
}

TEST_CASE("spectral norm matches a dense SVD") {
  CHECK(spectral_norm(Eigen::Vector2d(3, 1).asDiagonal().toDenseMatrix()).value == doctest::Approx(3.0).epsilon(1e-9));

  Rng rng(17);
  const MatrixXd m = rng.normal_matrix(50, 10);
  const double svd = Eigen::JacobiSVD<MatrixXd>(m).singularValues()(0);
  const SpectralNormEstimate est = spectral_norm(m);
  CHECK(est.converged);
  CHECK(std::abs(est.value - svd) <= 1e-6 * svd);
}

TEST_CASE("spectral norm recovers when the all-ones start lies in the null space") {
  MatrixXd m(1, 2);
  m << 1.0, -1.0;
  CHECK(spectral_norm(m).value == doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));
  CHECK(spectral_norm(MatrixXd::Zero(3, 2)).value == 0.0);
}

TEST_CASE("Gauss-Hermite rule integrates Gaussian moments") {
  const GaussHermiteRule rule = gauss_hermite(64);
  double wsum = 0.0;
  for (double w : rule.weights) wsum += w;
  CHECK(wsum == doctest::Approx(1.0).epsilon(1e-13));
  // E g^{2j} = (2j - 1)!!
  double double_factorial = 1.0;
  for (int j = 1; j <= 12; ++j) {
    double_factorial *= 2 * j - 1;
    const double got = rule.expect([&](double g) { return std::pow(g, 2 * j); });
    CHECK(got == doctest::Approx(double_factorial).epsilon(1e-10));
    CHECK(rule.expect([&](double g) { return std::pow(g, 2 * j - 1); }) == doctest::Approx(0.0).scale(double_factorial));
  }
  // E cos g = exp(-1/2)
  CHECK(rule.expect([](double g) { return std::cos(g); }) == doctest::Approx(std::exp(-0.5)).epsilon(1e-13));
}
