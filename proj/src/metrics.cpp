#include "oneshot/metrics.hpp"

#include <cmath>
#include <set>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include "oneshot/errors.hpp"

namespace oneshot {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double cosine_similarity(const VectorXd& x, const VectorXd& v) {
  if (x.size() != v.size()) throw ValidationError("cosine_similarity: dimension mismatch");
  const double norm = v.norm();
  if (norm == 0.0) throw ValidationError("cosine_similarity: zero estimate vector");
  return x.dot(v) / norm;
}

double error_to_scaled_target(const VectorXd& v, const VectorXd& x, double mu) {
  if (x.size() != v.size()) throw ValidationError("error_to_scaled_target: dimension mismatch");
  return (v - mu * x).norm();
}

ScoreRecord score(const VectorXd& x, const VectorXd& v, double mu, const std::optional<VectorXd>& projected_target) {
  ScoreRecord rec;
  rec.cosine = cosine_similarity(x, v);
  rec.l2_to_mux = error_to_scaled_target(v, x, mu);
  if (projected_target) rec.l2_to_projected_target = (v - *projected_target).norm();
  return rec;
}

RateFit fit_rate_slope(const std::vector<RatePoint>& points) {
  if (points.size() < 3) throw ValidationError("fit_rate_slope: need at least 3 points");
  std::set<double> distinct;
  std::vector<double> xs, ys;
  for (const auto& p : points) {
    if (!(p.m > 0.0) || !(p.error > 0.0) || !std::isfinite(p.error))
      throw ValidationError("fit_rate_slope: m and errors must be positive and finite");
    distinct.insert(p.m);
    xs.push_back(std::log(p.m));
    ys.push_back(std::log(p.error));
  }
  if (distinct.size() != points.size()) throw ValidationError("fit_rate_slope: m values must be distinct");

  const PolynomialFit line = fit_polynomial(xs, ys, 1);
  RateFit fit;
  fit.intercept = line.coefficients[0];
  fit.slope = line.coefficients[1];
  fit.slope_std_error = line.std_errors[1];
  double mean = 0.0;
  for (double y : ys) mean += y;
  mean /= static_cast<double>(ys.size());
  double ss_tot = 0.0, ss_res = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    const double pred = fit.intercept + fit.slope * xs[i];
    ss_res += (ys[i] - pred) * (ys[i] - pred);
    ss_tot += (ys[i] - mean) * (ys[i] - mean);
  }
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

PolynomialFit fit_polynomial(const std::vector<double>& xs, const std::vector<double>& ys, int degree) {
  const auto n = static_cast<Eigen::Index>(xs.size());
  if (degree < 0 || xs.size() != ys.size() || n < degree + 1)
    throw ValidationError("fit_polynomial: need at least degree + 1 points");
  MatrixXd design(n, degree + 1);
  VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double p = 1.0;
    for (int d = 0; d <= degree; ++d) {
      design(i, d) = p;
      p *= xs[i];
    }
    y[i] = ys[i];
  }
  const MatrixXd gram = design.transpose() * design;
  Eigen::LDLT<MatrixXd> ldlt(gram);
  if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-14)
    throw ValidationError("fit_polynomial: degenerate abscissae");
  const VectorXd beta = ldlt.solve(design.transpose() * y);

  PolynomialFit fit;
  fit.residual_dof = static_cast<int>(n) - (degree + 1);
  const double ss_res = (y - design * beta).squaredNorm();
  const double sigma2 = fit.residual_dof > 0 ? ss_res / fit.residual_dof : 0.0;
  const MatrixXd cov = ldlt.solve(MatrixXd::Identity(degree + 1, degree + 1)) * sigma2;
  for (int d = 0; d <= degree; ++d) {
    fit.coefficients.push_back(beta[d]);
    fit.std_errors.push_back(std::sqrt(std::max(0.0, cov(d, d))));
  }
  return fit;
}

double student_t_quantile(double p, int dof) {
  if (dof < 1) throw ValidationError("student_t_quantile: dof must be >= 1");
  return boost::math::quantile(boost::math::students_t(static_cast<double>(dof)), p);
}

}  // namespace oneshot
