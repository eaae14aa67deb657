#include "oneshot/observation.hpp"

#include <cmath>
#include <numbers>

#include "oneshot/errors.hpp"
#include "oneshot/quadrature.hpp"

namespace oneshot {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::noisy_one_bit: return "noisy_one_bit";
    case ModelKind::noisy_cubic: return "noisy_cubic";
    case ModelKind::identity: return "identity";
    case ModelKind::one_bit_signal_noise: return "one_bit_signal_noise";
    case ModelKind::cubic_signal_noise: return "cubic_signal_noise";
    case ModelKind::custom: return "custom";
  }
  return "custom";
}

ModelKind parse_model_kind(std::string_view name) {
  if (name == "noisy_one_bit" || name == "one-bit" || name == "one_bit" || name == "1bit")
    return ModelKind::noisy_one_bit;
  if (name == "noisy_cubic" || name == "cubic") return ModelKind::noisy_cubic;
  if (name == "identity" || name == "linear") return ModelKind::identity;
  if (name == "one_bit_signal_noise" || name == "one-bit-signal-noise") return ModelKind::one_bit_signal_noise;
  if (name == "cubic_signal_noise" || name == "cubic-signal-noise") return ModelKind::cubic_signal_noise;
  if (name == "custom") throw ValidationError("custom models cannot be named, build them in code");
  throw ValidationError("unknown observation model '" + std::string(name) + "'");
}

ObservationModel::ObservationModel(ModelKind kind, double sigma) : kind_(kind), sigma_(sigma) {
  if (kind == ModelKind::custom) throw ValidationError("use ObservationModel::custom for custom maps");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ValidationError("noise level sigma must be >= 0");
}

ObservationModel ObservationModel::custom(CustomNonlinearity f, CustomCheck check) {
  if (!f.map) throw ValidationError("custom model needs a map");
  ObservationModel model(ModelKind::identity, 0.0);
  model.kind_ = ModelKind::custom;
  model.custom_ = std::make_shared<const CustomNonlinearity>(std::move(f));
  if (check == CustomCheck::enforce) {
    const SimAssumptionReport report = validate_sim_assumptions(model, 1u << 18);
    if (!report.mu_nonzero)
      throw ValidationError("custom model '" + model.custom_->name +
                            "': E[f(g) g] is not distinguishable from 0 (mu_hat = " +
                            std::to_string(report.mu_hat) + ")");
    if (!report.fourth_moment_stable)
      throw ValidationError("custom model '" + model.custom_->name + "': E[f(g)^4] does not appear finite");
  }
  return model;
}

double ObservationModel::observe(double inner, Rng& noise) const {
  switch (kind_) {
    case ModelKind::noisy_one_bit: return sign0(inner + sigma_ * noise.normal());
    case ModelKind::noisy_cubic: return inner * inner * inner + sigma_ * noise.normal();
    case ModelKind::identity: return inner + sigma_ * noise.normal();
    case ModelKind::one_bit_signal_noise: return sign0(inner);
    case ModelKind::cubic_signal_noise: return inner * inner * inner;
    case ModelKind::custom: {
      double y = custom_->map(inner);
      if (custom_->noise) y += custom_->noise(noise);
      return y;
    }
  }
  return 0.0;
}

std::string ObservationModel::describe() const {
  if (kind_ == ModelKind::custom) return "custom(" + custom_->name + ")";
  return std::string(to_string(kind_)) + "(sigma=" + std::to_string(sigma_) + ")";
}

// ---------------------------------------------------------------------------
// Sampling

namespace {

void check_signal(const VectorXd& x, Index m) {
  if (x.size() < 1) throw ValidationError("signal must be non-empty");
  if (std::abs(x.norm() - 1.0) > 1e-10)
    throw ValidationError("signal must have unit norm (got " + std::to_string(x.norm()) + ")");
  if (m < 1) throw ValidationError("number of measurements m must be >= 1");
}

}  // namespace

MeasurementEnsemble sample_ensemble(const VectorXd& x, Index m, const ObservationModel& model, std::uint64_t seed) {
  if (model.perturbs_signal()) return sample_adversarial_ensemble(x, m, model, seed);
  check_signal(x, m);
  Rng design(derive_seed(seed, {0}));
  Rng noise(derive_seed(seed, {1}));
  MeasurementEnsemble out{x, design.normal_matrix(m, x.size()), VectorXd(m), seed, model};
  for (Index i = 0; i < m; ++i) out.y[i] = model.observe(out.a.row(i).dot(x), noise);
  return out;
}

MeasurementEnsemble sample_adversarial_ensemble(const VectorXd& x, Index m, const ObservationModel& model,
                                                std::uint64_t seed) {
  if (!model.perturbs_signal())
    throw ValidationError("sample_adversarial_ensemble needs a signal-noise model, got " + model.describe());
  check_signal(x, m);
  Rng design(derive_seed(seed, {0}));
  Rng noise(derive_seed(seed, {1}));
  MeasurementEnsemble out{x, design.normal_matrix(m, x.size()), VectorXd(m), seed, model};
  for (Index i = 0; i < m; ++i) {
    const VectorXd e = model.sigma() * noise.normal_vector(x.size());
    const double inner = out.a.row(i).dot(x) + out.a.row(i).dot(e);
    out.y[i] = model.observe(inner, noise);
  }
  return out;
}

MeasurementEnsemble apply_bounded_corruption(const MeasurementEnsemble& ensemble, double nu, std::uint64_t seed) {
  if (!(nu >= 0.0) || !std::isfinite(nu)) throw ValidationError("corruption budget nu must be >= 0");
  MeasurementEnsemble out = ensemble;
  out.corruption_budget = nu;
  if (nu == 0.0) return out;
  VectorXd direction = ensemble.y.unaryExpr([](double v) { return sign0(v); });
  if (direction.squaredNorm() == 0.0) {
    Rng rng(seed);
    direction = rng.normal_vector(ensemble.y.size());
  }
  const double budget = nu * std::sqrt(static_cast<double>(ensemble.y.size()));
  out.y += direction * (budget / direction.norm());
  return out;
}

// ---------------------------------------------------------------------------
// Characterization parameters

std::string_view to_string(ParameterMethod method) {
  switch (method) {
    case ParameterMethod::analytic: return "analytic";
    case ParameterMethod::quadrature: return "quadrature";
    case ParameterMethod::monte_carlo: return "monte_carlo";
  }
  return "analytic";
}

ParameterMethod parse_parameter_method(std::string_view name) {
  if (name == "analytic") return ParameterMethod::analytic;
  if (name == "quadrature") return ParameterMethod::quadrature;
  if (name == "monte_carlo" || name == "monte-carlo" || name == "mc") return ParameterMethod::monte_carlo;
  throw ValidationError("unknown parameter method '" + std::string(name) + "'");
}

namespace {

void check_invariants(const SimParameters& p, const ObservationModel& model) {
  const bool finite = std::isfinite(p.mu) && std::isfinite(p.xi_sq) && std::isfinite(p.rho_sq) &&
                      std::isfinite(p.theta_4);
  if (!finite) throw NumericalError("non-finite SIM parameters for " + model.describe());
  if (!(p.xi_sq > 0.0)) throw ValidationError("degenerate nonlinearity: E[f(g)^2] = 0 for " + model.describe());
  // Monte Carlo estimates only satisfy Cauchy-Schwarz up to sampling error.
  double slack = 1e-9 * p.xi_sq;
  if (p.std_errors) slack += 3.0 * (2.0 * std::abs(p.mu) * (*p.std_errors)[0] + (*p.std_errors)[1]);
  if (p.mu * p.mu > p.xi_sq + slack)
    throw NumericalError("SIM parameters violate mu^2 <= xi^2 for " + model.describe());
}

SimParameters analytic_parameters(const ObservationModel& model) {
  const double s2 = model.sigma() * model.sigma();
  SimParameters p;
  p.method = ParameterMethod::analytic;
  switch (model.kind()) {
    case ModelKind::noisy_one_bit:
      p.mu = std::sqrt(2.0 / (std::numbers::pi * (1.0 + s2)));
      p.xi_sq = 1.0;
      p.rho_sq = 1.0 - p.mu * p.mu;
      p.theta_4 = 0.0;
      break;
    case ModelKind::noisy_cubic:
      // E g^4 = 3, E g^6 = 15, E g^8 = 105, E g^12 = 10395.
      p.mu = 3.0;
      p.xi_sq = 15.0 + s2;
      p.rho_sq = 96.0 + s2;
      p.theta_4 = 10170.0 + 60.0 * s2 + 2.0 * s2 * s2;
      break;
    case ModelKind::identity:
      p.mu = 1.0;
      p.xi_sq = 1.0 + s2;
      p.rho_sq = 2.0 + s2;
      p.theta_4 = 2.0 * (1.0 + s2) * (1.0 + s2);
      break;
    default:
      throw ValidationError("no closed-form SIM parameters for " + model.describe());
  }
  return p;
}

// Moments of f(g) over the noise, conditional on g: E[f], E[f^2], E[f^4].
struct ConditionalMoments {
  double m1, m2, m4;
};

SimParameters quadrature_parameters(const ObservationModel& model, int order) {
  const double s = model.sigma();
  const double s2 = s * s;
  std::function<ConditionalMoments(double)> moments;
  switch (model.kind()) {
    case ModelKind::noisy_one_bit:
      moments = [s](double g) {
        const double m1 = s > 0.0 ? std::erf(g / (s * std::numbers::sqrt2)) : sign0(g);
        return ConditionalMoments{m1, 1.0, 1.0};
      };
      break;
    case ModelKind::noisy_cubic:
      moments = [s2](double g) {
        const double g3 = g * g * g;
        const double g6 = g3 * g3;
        return ConditionalMoments{g3, g6 + s2, g6 * g6 + 6.0 * g6 * s2 + 3.0 * s2 * s2};
      };
      break;
    case ModelKind::identity:
      moments = [s2](double g) {
        const double g2 = g * g;
        return ConditionalMoments{g, g2 + s2, g2 * g2 + 6.0 * g2 * s2 + 3.0 * s2 * s2};
      };
      break;
    case ModelKind::custom:
      if (model.custom_fn()->noise)
        throw ValidationError("quadrature needs a noise-free custom map; use monte_carlo");
      moments = [f = model.custom_fn()->map](double g) {
        const double v = f(g);
        return ConditionalMoments{v, v * v, v * v * v * v};
      };
      break;
    default:
      throw ValidationError("quadrature is not available for " + model.describe() + "; use monte_carlo");
  }

  const GaussHermiteRule rule = gauss_hermite(order);
  SimParameters p;
  p.method = ParameterMethod::quadrature;
  p.mu = rule.expect([&](double g) { return moments(g).m1 * g; });
  p.xi_sq = rule.expect([&](double g) { return moments(g).m2; });
  p.rho_sq = rule.expect([&](double g) { return moments(g).m2 * g * g; }) - p.mu * p.mu;
  p.theta_4 = rule.expect([&](double g) { return moments(g).m4; }) - p.xi_sq * p.xi_sq;
  return p;
}

// One draw of (g, y) with g = <a, x>.
class PairSampler {
 public:
  PairSampler(const ObservationModel& model, Index ambient_dim, std::uint64_t seed)
      : model_(model), rng_(seed), chi_sq_(ambient_dim > 1 ? static_cast<double>(ambient_dim - 1) : 1.0) {
    if (model.perturbs_signal() && ambient_dim < 1)
      throw ValidationError("signal-noise models need the ambient dimension n for Monte Carlo");
    has_rest_ = ambient_dim > 1;
  }

  std::pair<double, double> draw() {
    const double g = rng_.normal();
    if (!model_.perturbs_signal()) return {g, model_.observe(g, rng_)};
    // <a, e> given a is N(0, sigma^2 ||a||^2), with ||a||^2 = g^2 + chi^2_{n-1}.
    const double rest = has_rest_ ? chi_sq_(rng_.engine()) : 0.0;
    const double inner = g + model_.sigma() * std::sqrt(g * g + rest) * rng_.normal();
    return {g, model_.observe(inner, rng_)};
  }

 private:
  const ObservationModel& model_;
  Rng rng_;
  std::chi_squared_distribution<double> chi_sq_;
  bool has_rest_ = false;
};

struct SampleMoments {
  double mean = 0.0;
  double var = 0.0;
  double central4 = 0.0;
};

SampleMoments moments_of(const std::vector<double>& v) {
  SampleMoments out;
  const double n = static_cast<double>(v.size());
  for (double x : v) out.mean += x;
  out.mean /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double x : v) {
    const double d = (x - out.mean) * (x - out.mean);
    m2 += d;
    m4 += d * d;
  }
  out.var = m2 / (n - 1.0);
  out.central4 = m4 / n;
  return out;
}

SimParameters monte_carlo_parameters(const ObservationModel& model, const SimParameterOptions& options) {
  if (options.samples < 2) throw ValidationError("monte_carlo needs at least 2 samples");
  PairSampler sampler(model, options.ambient_dim, options.seed);
  std::vector<double> fg(options.samples), f2(options.samples);
  for (std::size_t i = 0; i < options.samples; ++i) {
    const auto [g, y] = sampler.draw();
    fg[i] = y * g;
    f2[i] = y * y;
  }
  const double n = static_cast<double>(options.samples);
  const SampleMoments a = moments_of(fg);
  const SampleMoments b = moments_of(f2);
  SimParameters p;
  p.method = ParameterMethod::monte_carlo;
  p.mu = a.mean;
  p.xi_sq = b.mean;
  p.rho_sq = a.var;
  p.theta_4 = b.var;
  // Var of a sample variance ~ (mu_4 - sigma^4) / N.
  p.std_errors = std::array<double, 4>{
      std::sqrt(a.var / n), std::sqrt(b.var / n),
      std::sqrt(std::max(0.0, a.central4 - a.var * a.var) / n),
      std::sqrt(std::max(0.0, b.central4 - b.var * b.var) / n)};
  return p;
}

}  // namespace

SimParameters sim_parameters(const ObservationModel& model, ParameterMethod method,
                             const SimParameterOptions& options) {
  SimParameters p;
  switch (method) {
    case ParameterMethod::analytic: p = analytic_parameters(model); break;
    case ParameterMethod::quadrature: p = quadrature_parameters(model, options.quadrature_order); break;
    case ParameterMethod::monte_carlo: p = monte_carlo_parameters(model, options); break;
  }
  check_invariants(p, model);
  return p;
}

SimParameters reference_parameters(const ObservationModel& model, const SimParameterOptions& options) {
  if (model.has_closed_form()) return sim_parameters(model, ParameterMethod::analytic, options);
  if (model.kind() == ModelKind::custom && !model.custom_fn()->noise)
    return sim_parameters(model, ParameterMethod::quadrature, options);
  return sim_parameters(model, ParameterMethod::monte_carlo, options);
}

SimAssumptionReport validate_sim_assumptions(const ObservationModel& model, std::size_t samples,
                                             std::uint64_t seed) {
  SimAssumptionReport report;
  const std::size_t base = std::max<std::size_t>(samples / 8, 16);
  // Signal-noise kinds are checked at a nominal n = 100.
  PairSampler sampler(model, model.perturbs_signal() ? 100 : 0, seed);

  double sum_fg = 0.0, sum_fg2 = 0.0, sum_f4 = 0.0;
  std::size_t count = 0;
  for (std::size_t target = base; target <= 8 * base; target *= 2) {
    for (; count < target; ++count) {
      const auto [g, y] = sampler.draw();
      sum_fg += y * g;
      sum_fg2 += y * g * y * g;
      sum_f4 += y * y * y * y;
    }
    report.fourth_moments.push_back(sum_f4 / static_cast<double>(count));
  }
  const double n = static_cast<double>(count);
  report.mu_hat = sum_fg / n;
  const double var = std::max(0.0, sum_fg2 / n - report.mu_hat * report.mu_hat);
  report.mu_std_error = std::sqrt(var / n);
  report.mu_nonzero = std::abs(report.mu_hat) > 3.0 * report.mu_std_error;

  const auto& e = report.fourth_moments;
  auto close = [](double prev, double next) {
    if (!std::isfinite(prev) || !std::isfinite(next)) return false;
    return std::abs(next - prev) <= 0.25 * std::max(std::abs(next), 1e-300) || (prev == 0.0 && next == 0.0);
  };
  report.fourth_moment_stable = close(e[1], e[2]) && close(e[2], e[3]);
  return report;
}

}  // namespace oneshot
