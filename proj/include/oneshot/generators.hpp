#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace oneshot {

/// Whether generator evaluation insists on latent inputs inside the ball.
enum class DomainMode { strict, unchecked };

std::string_view to_string(DomainMode mode);

enum class Activation { relu, sigmoid, tanh, none };

std::string_view to_string(Activation a);
/// Throws ValidationError naming the offending string.
Activation parse_activation(std::string_view name);

/// Lipschitz factor of an activation: 1/4 for sigmoid, 1 otherwise.
double activation_lipschitz(Activation a);

/// The radius-r Euclidean ball in R^k.
struct LatentBall {
  Eigen::Index dim = 1;
  double radius = 1.0;

  bool contains(const Eigen::VectorXd& z) const;
  /// Radial re-projection onto the ball; points inside are returned unchanged.
  Eigen::VectorXd clip(const Eigen::VectorXd& z) const;
};

/// G(z) = B z on a latent ball.
class LinearGenerator {
 public:
  LinearGenerator(Eigen::MatrixXd matrix, double radius);

  const Eigen::MatrixXd& matrix() const { return matrix_; }
  const LatentBall& domain() const { return domain_; }

 private:
  Eigen::MatrixXd matrix_;
  LatentBall domain_;
};

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
  Activation activation = Activation::none;
};

/// Fully-connected network h_{l+1} = act_l(W_l h_l + b_l).
class MlpGenerator {
 public:
  MlpGenerator(std::vector<DenseLayer> layers, double radius);

  const std::vector<DenseLayer>& layers() const { return layers_; }
  const LatentBall& domain() const { return domain_; }

 private:
  std::vector<DenseLayer> layers_;
  LatentBall domain_;
};

/// A Lipschitz map from a latent ball into R^n. Immutable once built, so one
/// instance can be evaluated from many threads.
class Generator {
 public:
  Generator(LinearGenerator g) : impl_(std::move(g)) {}
  Generator(MlpGenerator g) : impl_(std::move(g)) {}

  Eigen::Index latent_dim() const { return domain().dim; }
  Eigen::Index ambient_dim() const;
  const LatentBall& domain() const;
  double radius() const { return domain().radius; }

  bool is_linear() const { return std::holds_alternative<LinearGenerator>(impl_); }
  const LinearGenerator* as_linear() const { return std::get_if<LinearGenerator>(&impl_); }
  const MlpGenerator* as_mlp() const { return std::get_if<MlpGenerator>(&impl_); }

  /// G(z). Throws ValidationError on a dimension mismatch, or when `mode` is
  /// strict and z lies outside the ball.
  Eigen::VectorXd forward(const Eigen::VectorXd& z, DomainMode mode = DomainMode::strict) const;

  /// J(z)^T u, with J the Jacobian of forward at z. The relu derivative at a
  /// zero pre-activation is taken to be 0.
  Eigen::VectorXd jacobian_vector_product(const Eigen::VectorXd& z, const Eigen::VectorXd& u,
                                          DomainMode mode = DomainMode::strict) const;

  /// Largest singular value of B for linear generators. For MLPs the product
  /// over layers of ||W||_2 times the activation factor.
  double lipschitz_bound() const;

 private:
  void check_latent(const Eigen::VectorXd& z, DomainMode mode) const;

  std::variant<LinearGenerator, MlpGenerator> impl_;
};

/// A range point together with the latent that produced it.
struct RangePoint {
  Eigen::VectorXd z;
  Eigen::VectorXd w;
};

/// `count` points G(z) with z uniform in the ball.
std::vector<RangePoint> sample_range(const Generator& gen, std::size_t count, std::uint64_t seed);

// Weights files: JSON with kind, radius and either matrix or layers. Numbers
// are written with 17 significant digits so a round trip is bit-exact.
std::string generator_to_text(const Generator& gen);
Generator generator_from_text(std::string_view text);
void save_generator(const Generator& gen, const std::filesystem::path& path);
Generator load_generator(const std::filesystem::path& path);

/// Random MLP with the given layer widths. Weights are Gaussian, rescaled so
/// every layer has spectral norm `layer_norm`; biases are zero.
Generator make_random_mlp(const std::vector<Eigen::Index>& widths,
                          const std::vector<Activation>& activations, double radius,
                          double layer_norm, std::uint64_t seed);

/// The desk-scale stand-in for a pretrained decoder: 20-64-64-200,
/// relu/relu/none, ||W_l||_2 = 1.5, radius sqrt(20).
Generator make_synthetic_fixture(std::uint64_t seed);

/// n x k matrix with orthonormal columns (QR of a Gaussian matrix).
Eigen::MatrixXd random_orthonormal_columns(Eigen::Index n, Eigen::Index k, std::uint64_t seed);

}  // namespace oneshot
