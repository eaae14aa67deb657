#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "oneshot/rng.hpp"

namespace oneshot {

/// sign with sign(0) = 0.
inline double sign0(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

enum class ModelKind {
  noisy_one_bit,         // sign(<a,x> + e),   e ~ N(0, sigma^2)
  noisy_cubic,           // <a,x>^3 + eta,     eta ~ N(0, sigma^2)
  identity,              // <a,x> + eta
  one_bit_signal_noise,  // sign(<a, x + e>),  e ~ N(0, sigma^2 I_n)
  cubic_signal_noise,    // <a, x + eta>^3
  custom,
};

std::string_view to_string(ModelKind kind);
/// Accepts the canonical names plus CLI spellings such as "one-bit" and "cubic".
ModelKind parse_model_kind(std::string_view name);

/// A user-supplied nonlinearity f(g) = map(g) + noise().
struct CustomNonlinearity {
  std::function<double(double)> map;
  std::function<double(Rng&)> noise;  // optional additive noise
  std::string name = "custom";
};

enum class CustomCheck { enforce, skip };

/// A SIM nonlinearity: its kind, noise level and, for custom kinds, the map.
class ObservationModel {
 public:
  ObservationModel(ModelKind kind, double sigma);

  static ObservationModel noisy_one_bit(double sigma) { return {ModelKind::noisy_one_bit, sigma}; }
  static ObservationModel noisy_cubic(double sigma) { return {ModelKind::noisy_cubic, sigma}; }
  static ObservationModel identity(double sigma = 0.0) { return {ModelKind::identity, sigma}; }

  /// With CustomCheck::enforce the constructor verifies E[f(g) g] != 0 and a
  /// finite-looking fourth moment by Monte Carlo, throwing ValidationError
  /// otherwise. CustomCheck::skip builds the model unconditionally so that
  /// validate_sim_assumptions can report on it.
  static ObservationModel custom(CustomNonlinearity f, CustomCheck check = CustomCheck::enforce);

  ModelKind kind() const { return kind_; }
  double sigma() const { return sigma_; }
  const CustomNonlinearity* custom_fn() const { return custom_.get(); }

  /// Perturbation enters through the signal vector, so y depends on all of a.
  bool perturbs_signal() const {
    return kind_ == ModelKind::one_bit_signal_noise || kind_ == ModelKind::cubic_signal_noise;
  }
  /// Observations take values in {-1, 0, +1}.
  bool is_binary() const {
    return kind_ == ModelKind::noisy_one_bit || kind_ == ModelKind::one_bit_signal_noise;
  }
  bool has_closed_form() const {
    return kind_ == ModelKind::noisy_one_bit || kind_ == ModelKind::noisy_cubic || kind_ == ModelKind::identity;
  }

  /// y for a given inner product. For signal-noise kinds `inner` must already
  /// include the perturbation and `noise` is not consumed; otherwise exactly
  /// one draw is taken from `noise` (custom: whatever its sampler consumes).
  double observe(double inner, Rng& noise) const;

  std::string describe() const;

 private:
  ModelKind kind_;
  double sigma_;
  std::shared_ptr<const CustomNonlinearity> custom_;
};

/// Ground truth, design, observations and the seed that produced them.
struct MeasurementEnsemble {
  Eigen::VectorXd x;
  Eigen::MatrixXd a;
  Eigen::VectorXd y;
  std::uint64_t seed = 0;
  ObservationModel model = ObservationModel::identity();
  double corruption_budget = 0.0;  // nu of an applied bounded corruption

  Eigen::Index m() const { return a.rows(); }
  Eigen::Index n() const { return a.cols(); }
};

/// y_i = f_i(<a_i, x>) with i.i.d. N(0,1) entries of A.
///
/// A is drawn row-major from stream derive_seed(seed, {0}); noise comes from
/// the independent stream derive_seed(seed, {1}). So two models sharing a seed
/// share A, and a zero noise level reproduces the noiseless observations.
/// Signal-noise kinds are routed to sample_adversarial_ensemble.
MeasurementEnsemble sample_ensemble(const Eigen::VectorXd& x, Eigen::Index m, const ObservationModel& model,
                                    std::uint64_t seed);

/// y_i = sign(<a_i, x + e_i>) or <a_i, x + e_i>^3 with e_i ~ N(0, sigma^2 I_n)
/// drawn fresh for every row.
MeasurementEnsemble sample_adversarial_ensemble(const Eigen::VectorXd& x, Eigen::Index m,
                                                const ObservationModel& model, std::uint64_t seed);

/// Adds c with ||c||_2 = nu sqrt(m), aligned with the sign pattern of y, so
/// that (1/sqrt m)||y' - f(Ax)|| = nu exactly. If y is identically zero the
/// direction is a Gaussian vector drawn from `seed`.
MeasurementEnsemble apply_bounded_corruption(const MeasurementEnsemble& ensemble, double nu, std::uint64_t seed);

// ---------------------------------------------------------------------------

enum class ParameterMethod { analytic, quadrature, monte_carlo };

std::string_view to_string(ParameterMethod method);
ParameterMethod parse_parameter_method(std::string_view name);

/// mu = E[f(g) g], xi^2 = E[f(g)^2], rho^2 = Var[f(g) g], theta^4 = Var[f(g)^2].
struct SimParameters {
  double mu = 0.0;
  double xi_sq = 0.0;
  double rho_sq = 0.0;
  double theta_4 = 0.0;
  ParameterMethod method = ParameterMethod::analytic;
  /// Monte Carlo standard errors in the order mu, xi_sq, rho_sq, theta_4.
  std::optional<std::array<double, 4>> std_errors;
};

struct SimParameterOptions {
  std::size_t samples = 1'000'000;  // Monte Carlo draws
  std::uint64_t seed = 0x5eed;      // Monte Carlo stream
  int quadrature_order = 64;
  /// n, only needed by signal-noise kinds (their y depends on ||a||).
  Eigen::Index ambient_dim = 0;
};

/// Throws ValidationError for analytic on a kind without closed form, or
/// quadrature on a kind whose noise has no analytic moments.
SimParameters sim_parameters(const ObservationModel& model, ParameterMethod method,
                             const SimParameterOptions& options = {});

/// Best available: analytic, else quadrature, else Monte Carlo.
SimParameters reference_parameters(const ObservationModel& model, const SimParameterOptions& options = {});

struct SimAssumptionReport {
  double mu_hat = 0.0;
  double mu_std_error = 0.0;
  bool mu_nonzero = false;
  /// E[f(g)^4] estimates on nested sample sizes N, 2N, 4N, 8N.
  std::vector<double> fourth_moments;
  bool fourth_moment_stable = false;

  bool passes() const { return mu_nonzero && fourth_moment_stable; }
};

/// mu != 0 when |mu_hat| exceeds 3 standard errors; the fourth moment counts
/// as finite when the last two doublings each move the estimate by <= 25%.
SimAssumptionReport validate_sim_assumptions(const ObservationModel& model, std::size_t samples = 1u << 20,
                                             std::uint64_t seed = 0xa55e55);

}  // namespace oneshot
