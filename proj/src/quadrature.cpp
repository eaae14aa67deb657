#include "oneshot/quadrature.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "oneshot/errors.hpp"

namespace oneshot {

namespace {

// Orthonormal probabilists' Hermite recurrence:
// p_{j+1}(x) = (x p_j(x) - sqrt(j) p_{j-1}(x)) / sqrt(j+1).
struct HermiteEval {
  double p_n = 0.0;       // p_order(x)
  double p_nm1 = 0.0;     // p_{order-1}(x)
  double christoffel = 0.0;  // sum_{j<order} p_j(x)^2
};

HermiteEval evaluate(int order, double x) {
  double prev = 0.0, cur = 1.0, sum = 1.0;
  for (int j = 0; j < order; ++j) {
    const double next = (x * cur - std::sqrt(static_cast<double>(j)) * prev) / std::sqrt(j + 1.0);
    prev = cur;
    cur = next;
    if (j + 1 < order) sum += cur * cur;
  }
  return {cur, prev, sum};
}

}  // namespace

GaussHermiteRule gauss_hermite(int order) {
  if (order < 1) throw ValidationError("Gauss-Hermite order must be >= 1");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
  for (int j = 1; j < order; ++j) {
    jacobi(j, j - 1) = std::sqrt(static_cast<double>(j));
    jacobi(j - 1, j) = jacobi(j, j - 1);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi, Eigen::EigenvaluesOnly);

  GaussHermiteRule rule;
  rule.nodes.resize(order);
  rule.weights.resize(order);
  for (int i = 0; i < order; ++i) {
    double x = solver.eigenvalues()[i];
    // p_n'(x) = sqrt(n) p_{n-1}(x)
    for (int step = 0; step < 3; ++step) {
      const HermiteEval e = evaluate(order, x);
      const double slope = std::sqrt(static_cast<double>(order)) * e.p_nm1;
      if (slope == 0.0) break;
      x -= e.p_n / slope;
    }
    rule.nodes[i] = x;
    rule.weights[i] = 1.0 / evaluate(order, x).christoffel;
  }
  // Symmetrize to remove round-off asymmetry between +x and -x.
  for (int i = 0; i < order / 2; ++i) {
    const int j = order - 1 - i;
    const double x = 0.5 * (rule.nodes[j] - rule.nodes[i]);
    const double w = 0.5 * (rule.weights[i] + rule.weights[j]);
    rule.nodes[i] = -x;
    rule.nodes[j] = x;
    rule.weights[i] = rule.weights[j] = w;
  }
  if (order % 2 == 1) rule.nodes[order / 2] = 0.0;
  return rule;
}

}  // namespace oneshot
