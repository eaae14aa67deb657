#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "oneshot/generators.hpp"
#include "oneshot/observation.hpp"
#include "oneshot/projection.hpp"

namespace oneshot {

/// Empirical checks of the concentration statements behind the OneShot error
/// bound. Every comparison of a Monte Carlo frequency with a bound carries
/// three binomial standard errors of slack.
struct DiagnosticsConfig {
  std::size_t trials = 1000;
  Eigen::Index m = 200;
  double t = 1.0;        // deviation radius for mu_hat
  double epsilon = 2.0;  // deviation parameter of the orthogonal tail
  double delta = 0.01;   // net resolution, only used in reported bound values
  std::optional<Eigen::VectorXd> probe_s;

  void validate() const;
};

/// xi sqrt(k log(L r / delta) / m)
double predicted_rate_bound(double xi, Eigen::Index k, double lipschitz, double radius, double delta, double m);

struct FrequencyCheck {
  double frequency = 0.0;  // fraction of trials
  double bound = 0.0;
  double std_error = 0.0;  // binomial, evaluated at the bound
  std::size_t trials = 0;
  bool passes = false;
};

/// Frequency of (1/m) sum y_i^2 <= 2 xi^2 against 1 - theta^4 / (m xi^4).
/// Passes when frequency >= bound - 3 s.e.
FrequencyCheck event_E_frequency(const ObservationModel& model, const Eigen::VectorXd& x, Eigen::Index m,
                                 std::size_t trials, std::uint64_t seed);

/// Frequency of |(1/m) sum y_i <a_i, x> - mu| >= t against rho^2 / (m t^2).
/// Passes when frequency <= bound + 3 s.e.
FrequencyCheck mu_hat_concentration(const ObservationModel& model, const Eigen::VectorXd& x, Eigen::Index m,
                                    double t, std::size_t trials, std::uint64_t seed);

struct OrthogonalTailResult {
  /// Per-trial statistic (1/m) sum y_i <P_perp a_i, s>, for every trial.
  std::vector<double> statistics;
  std::size_t conditioned_trials = 0;  // trials inside the second-moment event
  double threshold = 0.0;              // xi ||s|| sqrt(epsilon / m)
  /// Exceedance frequency among conditioned trials.
  double tail_frequency = 0.0;
  /// Mean over conditioned trials of the exact conditional Gaussian tail
  /// P(|N(0, ||P_perp s||^2 sum y^2 / m^2)| > threshold).
  double gaussian_prediction = 0.0;
  double prediction_std_error = 0.0;
  /// Worst case over the event: P(|N(0,1)| > sqrt(epsilon / 2)).
  double gaussian_bound = 0.0;
  double bound_std_error = 0.0;
  bool passes = false;  // tail_frequency <= gaussian_bound + 3 s.e.
};

OrthogonalTailResult orthogonal_tail(const ObservationModel& model, const Eigen::VectorXd& x,
                                     const Eigen::VectorXd& s, Eigen::Index m, double epsilon, std::size_t trials,
                                     std::uint64_t seed);

struct NoiseCurveRow {
  double nu = 0.0;
  double mean_error = 0.0;  // mean ||x_hat - mu x||
  double std_error = 0.0;
};

struct NoiseCurve {
  std::vector<NoiseCurveRow> rows;
  double intercept = 0.0;           // linear fit err ~ intercept + slope nu
  double linear_coefficient = 0.0;
  double max_linear_residual = 0.0;
  double curvature = 0.0;  // quadratic coefficient of an OLS quadratic fit
  double curvature_std_error = 0.0;
  double curvature_critical = 0.0;  // one-sided 95% t quantile times s.e.
  int inversions = 0;               // adjacent decreases of the mean error
  bool passes = false;  // inversions <= 1 and curvature <= curvature_critical
};

/// Runs one_shot on nu-corrupted copies of the same ensembles (trial seeds
/// derive_seed(seed, {trial})) and tabulates the mean error for each nu.
NoiseCurve corollary_noise_curve(const ObservationModel& model, const Generator& gen, const Eigen::VectorXd& x,
                                 Eigen::Index m, const std::vector<double>& nu_grid, std::size_t trials,
                                 std::uint64_t seed, const ProjectionConfig& projection);

/// I - x x^T
Eigen::MatrixXd orthogonal_complement_projector(const Eigen::VectorXd& x);

}  // namespace oneshot
