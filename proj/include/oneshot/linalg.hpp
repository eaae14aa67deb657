#pragma once

#include <Eigen/Core>

namespace oneshot {

struct PowerIterationOptions {
  double tolerance = 1e-8;
  int max_iterations = 1000;
};

struct SpectralNormEstimate {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Largest singular value by power iteration on M^T M.
///
/// Starts from the normalized all-ones vector and stops once successive
/// estimates agree to `tolerance` relative. If the start vector lies in the
/// null space of M the largest-norm column direction is used instead.
SpectralNormEstimate spectral_norm(const Eigen::MatrixXd& m, PowerIterationOptions options = {});

}  // namespace oneshot
