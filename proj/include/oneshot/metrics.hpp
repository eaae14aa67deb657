#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

namespace oneshot {

/// <x, v / ||v||>. Throws ValidationError when v = 0.
double cosine_similarity(const Eigen::VectorXd& x, const Eigen::VectorXd& v);

/// ||v - mu x||_2
double error_to_scaled_target(const Eigen::VectorXd& v, const Eigen::VectorXd& x, double mu);

struct ScoreRecord {
  double cosine = 0.0;
  double l2_to_mux = 0.0;
  /// ||v - P_G(mu x)||, set when the projected target is known.
  std::optional<double> l2_to_projected_target;
};

ScoreRecord score(const Eigen::VectorXd& x, const Eigen::VectorXd& v, double mu,
                  const std::optional<Eigen::VectorXd>& projected_target = std::nullopt);

struct RatePoint {
  double m = 0.0;
  double error = 0.0;
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double slope_std_error = 0.0;
};

/// Ordinary least squares of log(error) on log(m). Needs >= 3 points with
/// distinct m and positive errors.
RateFit fit_rate_slope(const std::vector<RatePoint>& points);

/// Least-squares polynomial fit with classical OLS standard errors.
struct PolynomialFit {
  std::vector<double> coefficients;  // constant term first
  std::vector<double> std_errors;
  int residual_dof = 0;
};

PolynomialFit fit_polynomial(const std::vector<double>& xs, const std::vector<double>& ys, int degree);

/// One-sided Student-t quantile P(T <= q) = p, for dof >= 1.
double student_t_quantile(double p, int dof);

}  // namespace oneshot
