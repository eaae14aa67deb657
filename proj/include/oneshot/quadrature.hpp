#pragma once

#include <vector>

namespace oneshot {

/// Gauss-Hermite rule for expectations under the standard normal density:
/// E[h(g)] ~= sum_i weights[i] * h(nodes[i]), with the weights summing to 1.
/// Exact for polynomials of degree <= 2 * order - 1.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  template <class F>
  double expect(F&& h) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * h(nodes[i]);
    return acc;
  }
};

/// Nodes from the eigenvalues of the Jacobi matrix of the orthonormal
/// probabilists' Hermite polynomials, polished by Newton steps; weights from
/// the Christoffel function 1 / sum_j p_j(x)^2.
GaussHermiteRule gauss_hermite(int order);

}  // namespace oneshot
