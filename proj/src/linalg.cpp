#include "oneshot/linalg.hpp"

#include <cmath>

namespace oneshot {

SpectralNormEstimate spectral_norm(const Eigen::MatrixXd& m, PowerIterationOptions options) {
  SpectralNormEstimate out;
  if (m.size() == 0) {
    out.converged = true;
    return out;
  }
  Eigen::VectorXd v = Eigen::VectorXd::Ones(m.cols()) / std::sqrt(static_cast<double>(m.cols()));
  Eigen::VectorXd mv = m * v;
  if (mv.norm() == 0.0) {
    Eigen::Index col = 0;
    m.colwise().norm().maxCoeff(&col);
    v.setZero();
    v[col] = 1.0;
    mv = m * v;
  }
  double sigma = mv.norm();
  if (sigma == 0.0) {
    out.converged = true;
    return out;
  }

  for (int it = 1; it <= options.max_iterations; ++it) {
    Eigen::VectorXd next = m.transpose() * mv;
    const double norm = next.norm();
    if (norm == 0.0) break;
    v = next / norm;
    mv = m * v;
    const double updated = mv.norm();
    out.iterations = it;
    const bool done = std::abs(updated - sigma) <= options.tolerance * updated;
    sigma = updated;
    if (done) {
      out.converged = true;
      break;
    }
  }
  out.value = sigma;
  return out;
}

}  // namespace oneshot
