#include "oneshot/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "oneshot/errors.hpp"
#include "oneshot/estimators.hpp"
#include "oneshot/metrics.hpp"
#include "oneshot/parallel.hpp"

namespace oneshot {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void DiagnosticsConfig::validate() const {
  if (trials < 30) throw ValidationError("diagnostics need at least 30 trials");
  if (m < 1) throw ValidationError("diagnostics need m >= 1");
  if (!(t > 0.0) || !(epsilon > 0.0) || !(delta > 0.0))
    throw ValidationError("diagnostics need t, epsilon and delta > 0");
}

double predicted_rate_bound(double xi, Index k, double lipschitz, double radius, double delta, double m) {
  const double log_term = std::log(lipschitz * radius / delta);
  return xi * std::sqrt(static_cast<double>(k) * std::max(log_term, 0.0) / m);
}

MatrixXd orthogonal_complement_projector(const VectorXd& x) {
  return MatrixXd::Identity(x.size(), x.size()) - x * x.transpose();
}

namespace {

void check_trials(std::size_t trials) {
  if (trials < 30) throw ValidationError("diagnostics need at least 30 trials, got " + std::to_string(trials));
}

SimParameters parameters_for(const ObservationModel& model, const VectorXd& x) {
  SimParameterOptions options;
  options.ambient_dim = x.size();
  return reference_parameters(model, options);
}

double binomial_se(double p, std::size_t n) {
  const double q = std::clamp(p, 0.0, 1.0);
  return n > 0 ? std::sqrt(q * (1.0 - q) / static_cast<double>(n)) : 0.0;
}

double two_sided_normal_tail(double z) { return std::erfc(z / std::sqrt(2.0)); }

MeasurementEnsemble trial_ensemble(const ObservationModel& model, const VectorXd& x, Index m, std::uint64_t seed,
                                   std::size_t trial) {
  return sample_ensemble(x, m, model, derive_seed(seed, {static_cast<std::uint64_t>(trial)}));
}

}  // namespace

FrequencyCheck event_E_frequency(const ObservationModel& model, const VectorXd& x, Index m, std::size_t trials,
                                 std::uint64_t seed) {
  check_trials(trials);
  const SimParameters p = parameters_for(model, x);
  std::vector<char> holds(trials, 0);
  parallel_for(trials, [&](std::size_t trial) {
    const MeasurementEnsemble e = trial_ensemble(model, x, m, seed, trial);
    holds[trial] = e.y.squaredNorm() / static_cast<double>(m) <= 2.0 * p.xi_sq;
  });
  FrequencyCheck out;
  out.trials = trials;
  out.frequency = static_cast<double>(std::count(holds.begin(), holds.end(), 1)) / static_cast<double>(trials);
  out.bound = 1.0 - p.theta_4 / (static_cast<double>(m) * p.xi_sq * p.xi_sq);
  out.std_error = binomial_se(out.bound, trials);
  out.passes = out.frequency >= out.bound - 3.0 * out.std_error;
  return out;
}

FrequencyCheck mu_hat_concentration(const ObservationModel& model, const VectorXd& x, Index m, double t,
                                    std::size_t trials, std::uint64_t seed) {
  check_trials(trials);
  if (!(t > 0.0)) throw ValidationError("mu_hat_concentration needs t > 0");
  const SimParameters p = parameters_for(model, x);
  std::vector<char> violated(trials, 0);
  parallel_for(trials, [&](std::size_t trial) {
    const MeasurementEnsemble e = trial_ensemble(model, x, m, seed, trial);
    const double mu_hat = e.y.dot(e.a * x) / static_cast<double>(m);
    violated[trial] = std::abs(mu_hat - p.mu) >= t;
  });
  FrequencyCheck out;
  out.trials = trials;
  out.frequency = static_cast<double>(std::count(violated.begin(), violated.end(), 1)) / static_cast<double>(trials);
  out.bound = p.rho_sq / (static_cast<double>(m) * t * t);
  out.std_error = binomial_se(out.bound, trials);
  out.passes = out.frequency <= out.bound + 3.0 * out.std_error;
  return out;
}

OrthogonalTailResult orthogonal_tail(const ObservationModel& model, const VectorXd& x, const VectorXd& s, Index m,
                                     double epsilon, std::size_t trials, std::uint64_t seed) {
  check_trials(trials);
  if (s.size() != x.size()) throw ValidationError("orthogonal_tail: probe has the wrong dimension");
  if (s.norm() == 0.0) throw ValidationError("orthogonal_tail: probe vector must be non-zero");
  if (!(epsilon > 0.0)) throw ValidationError("orthogonal_tail: epsilon must be > 0");
  const SimParameters p = parameters_for(model, x);
  const double md = static_cast<double>(m);
  const VectorXd probe = orthogonal_complement_projector(x) * s;
  const double probe_sq = probe.squaredNorm();

  OrthogonalTailResult out;
  out.threshold = std::sqrt(p.xi_sq) * s.norm() * std::sqrt(epsilon / md);
  out.statistics.resize(trials);
  std::vector<double> sum_y2(trials);
  parallel_for(trials, [&](std::size_t trial) {
    const MeasurementEnsemble e = trial_ensemble(model, x, m, seed, trial);
    out.statistics[trial] = e.y.dot(e.a * probe) / md;
    sum_y2[trial] = e.y.squaredNorm();
  });

  std::size_t exceed = 0;
  double prediction = 0.0;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    if (sum_y2[trial] / md > 2.0 * p.xi_sq) continue;
    ++out.conditioned_trials;
    if (std::abs(out.statistics[trial]) > out.threshold) ++exceed;
    const double variance = probe_sq * sum_y2[trial] / (md * md);
    if (variance > 0.0) prediction += two_sided_normal_tail(out.threshold / std::sqrt(variance));
  }
  const std::size_t n = out.conditioned_trials;
  if (n > 0) {
    out.tail_frequency = static_cast<double>(exceed) / static_cast<double>(n);
    out.gaussian_prediction = prediction / static_cast<double>(n);
  }
  out.prediction_std_error = binomial_se(out.gaussian_prediction, n);
  out.gaussian_bound = two_sided_normal_tail(std::sqrt(epsilon / 2.0));
  out.bound_std_error = binomial_se(out.gaussian_bound, n);
  out.passes = out.tail_frequency <= out.gaussian_bound + 3.0 * out.bound_std_error;
  return out;
}

NoiseCurve corollary_noise_curve(const ObservationModel& model, const Generator& gen, const VectorXd& x, Index m,
                                 const std::vector<double>& nu_grid, std::size_t trials, std::uint64_t seed,
                                 const ProjectionConfig& projection) {
  check_trials(trials);
  if (nu_grid.size() < 3) throw ValidationError("noise curve needs at least 3 values of nu");
  for (std::size_t j = 0; j < nu_grid.size(); ++j) {
    if (!(nu_grid[j] >= 0.0)) throw ValidationError("noise curve: nu must be >= 0");
    if (j > 0 && !(nu_grid[j] > nu_grid[j - 1])) throw ValidationError("noise curve: nu grid must ascend");
  }
  const double mu = parameters_for(model, x).mu;
  const std::size_t levels = nu_grid.size();
  std::vector<double> errors(trials * levels);
  parallel_for(trials, [&](std::size_t trial) {
    const MeasurementEnsemble clean = trial_ensemble(model, x, m, seed, trial);
    for (std::size_t j = 0; j < levels; ++j) {
      const MeasurementEnsemble corrupted =
          apply_bounded_corruption(clean, nu_grid[j], derive_seed(seed, {trial, j, 0xC0FFEE}));
      const RecoveryResult r = one_shot(corrupted, gen, projection);
      errors[trial * levels + j] = error_to_scaled_target(r.estimate, x, mu);
    }
  });

  NoiseCurve out;
  std::vector<double> means;
  for (std::size_t j = 0; j < levels; ++j) {
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t trial = 0; trial < trials; ++trial) {
      const double v = errors[trial * levels + j];
      sum += v;
      sum_sq += v * v;
    }
    const double n = static_cast<double>(trials);
    const double mean = sum / n;
    const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
    out.rows.push_back({nu_grid[j], mean, std::sqrt(var / n)});
    means.push_back(mean);
    if (j > 0 && mean < means[j - 1]) ++out.inversions;
  }

  const PolynomialFit line = fit_polynomial(nu_grid, means, 1);
  out.intercept = line.coefficients[0];
  out.linear_coefficient = line.coefficients[1];
  for (std::size_t j = 0; j < levels; ++j)
    out.max_linear_residual =
        std::max(out.max_linear_residual, std::abs(means[j] - out.intercept - out.linear_coefficient * nu_grid[j]));

  const PolynomialFit quad = fit_polynomial(nu_grid, means, 2);
  out.curvature = quad.coefficients[2];
  out.curvature_std_error = quad.std_errors[2];
  out.curvature_critical =
      quad.residual_dof > 0 ? student_t_quantile(0.95, quad.residual_dof) * out.curvature_std_error : 0.0;
  out.passes = out.inversions <= 1 && out.curvature <= out.curvature_critical;
  return out;
}

}  // namespace oneshot
