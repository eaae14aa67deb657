#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include <Eigen/Core>

namespace oneshot {

/// SplitMix64 finalizer. A bijection on 64-bit words.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Counter-based seed derivation: folds each index into the running state with
/// `h = mix64(h ^ mix64(index + golden))`, starting from `h = mix64(base)`.
/// For a fixed prefix the map index -> seed is injective.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> path) noexcept;

/// Deterministic random stream.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Uniforms take the top 53 bits and sit at the midpoint of their
/// bucket, so they lie strictly in (0, 1). Standard normals use the basic
/// Box-Muller transform: each pair (u1, u2) yields
/// sqrt(-2 ln u1) * cos(2 pi u2) followed by sqrt(-2 ln u1) * sin(2 pi u2).
/// None of this may change without breaking every stored seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform();
  double normal();

  Eigen::VectorXd normal_vector(Eigen::Index n);
  /// Row-major fill, so a matrix and its rows draw the same sequence.
  Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols);

  /// Uniform point in the radius-r ball of dimension k.
  Eigen::VectorXd uniform_in_ball(Eigen::Index k, double radius);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace oneshot
