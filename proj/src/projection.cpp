#include "oneshot/projection.hpp"

#include <cmath>
#include <limits>

#include <Eigen/SVD>

#include "oneshot/errors.hpp"
#include "oneshot/rng.hpp"

namespace oneshot {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string_view to_string(ProjectionMethod method) {
  return method == ProjectionMethod::exact_linear ? "exact_linear" : "latent_adam";
}

ProjectionMethod parse_projection_method(std::string_view name) {
  if (name == "exact_linear" || name == "exact") return ProjectionMethod::exact_linear;
  if (name == "latent_adam" || name == "adam") return ProjectionMethod::latent_adam;
  throw ValidationError("unknown projection method '" + std::string(name) + "'");
}

void ProjectionConfig::validate() const {
  if (steps < 1) throw ValidationError("projection.steps must be >= 1");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    throw ValidationError("projection.learning_rate must be > 0");
  if (restarts < 1) throw ValidationError("projection.restarts must be >= 1");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) ||
      !(adam.epsilon > 0.0))
    throw ValidationError("projection.adam: need 0 <= beta < 1 and epsilon > 0");
}

std::string ProjectionConfig::mode_label() const {
  if (method == ProjectionMethod::exact_linear) return "exact_linear";
  return "latent_adam:" + std::string(to_string(domain_mode));
}

ProjectionResult project_exact_linear(const LinearGenerator& lin, const VectorXd& s) {
  const MatrixXd& b = lin.matrix();
  if (s.size() != b.rows())
    throw ValidationError("projection target has dimension " + std::to_string(s.size()) + ", expected " +
                          std::to_string(b.rows()));
  const double r = lin.domain().radius;

  Eigen::JacobiSVD<MatrixXd> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd& sv = svd.singularValues();
  const VectorXd c = svd.matrixU().transpose() * s;
  const double cutoff = sv.size() > 0 ? sv[0] * std::numeric_limits<double>::epsilon() *
                                            static_cast<double>(std::max(b.rows(), b.cols()))
                                      : 0.0;

  // Coefficients of z in the right singular basis for multiplier lambda.
  auto coefficients = [&](double lambda) {
    VectorXd out(sv.size());
    for (Index i = 0; i < sv.size(); ++i) {
      if (lambda == 0.0)
        out[i] = sv[i] > cutoff ? c[i] / sv[i] : 0.0;
      else
        out[i] = sv[i] * c[i] / (sv[i] * sv[i] + lambda);
    }
    return out;
  };

  double lambda = 0.0;
  VectorXd coef = coefficients(0.0);
  if (coef.norm() > r) {
    double lo = 0.0;
    double hi = (b.transpose() * s).norm() / r;
    coef = coefficients(hi);
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      VectorXd trial = coefficients(mid);
      if (trial.norm() > r) {
        lo = mid;
      } else {
        hi = mid;
        coef = std::move(trial);
      }
    }
    lambda = hi;
  }

  ProjectionResult out;
  out.z = svd.matrixV() * coef;
  if (out.z.norm() > r) out.z *= r / out.z.norm();
  out.w = b * out.z;
  out.objective = (out.w - s).squaredNorm();
  out.per_restart_objectives = {out.objective};
  out.multiplier = lambda;
  out.method = ProjectionMethod::exact_linear;
  out.domain_mode = DomainMode::strict;
  return out;
}

ProjectionResult project_exact_linear(const Generator& gen, const VectorXd& s) {
  const LinearGenerator* lin = gen.as_linear();
  if (!lin) throw ValidationError("exact_linear projection needs a linear generator");
  return project_exact_linear(*lin, s);
}

ProjectionResult minimize_latent(const Generator& gen, const RangeLoss& loss, const ProjectionConfig& cfg) {
  cfg.validate();
  const Index k = gen.latent_dim();
  const DomainMode mode = cfg.domain_mode;
  const LatentBall& ball = gen.domain();

  ProjectionResult out;
  out.method = ProjectionMethod::latent_adam;
  out.domain_mode = mode;
  out.restarts.reserve(cfg.restarts);

  for (int restart = 0; restart < cfg.restarts; ++restart) {
    Rng rng(derive_seed(cfg.restart_seed, {static_cast<std::uint64_t>(restart)}));
    VectorXd z = rng.normal_vector(k);
    if (mode == DomainMode::strict) z = ball.clip(z);

    RestartOutcome rec;
    rec.objective = std::numeric_limits<double>::infinity();
    VectorXd m1 = VectorXd::Zero(k), m2 = VectorXd::Zero(k);
    double beta1_pow = 1.0, beta2_pow = 1.0;

    for (int step = 0; step <= cfg.steps; ++step) {
      const VectorXd w = gen.forward(z, mode);
      auto [value, dw] = loss(w);
      if (!std::isfinite(value) || !w.allFinite()) {
        rec.diverged = true;
        rec.final_objective = value;
        break;
      }
      if (step == 0) rec.initial_objective = value;
      rec.final_objective = value;
      if (value < rec.objective) {
        rec.objective = value;
        rec.z = z;
        rec.w = w;
      }
      if (step == cfg.steps) break;

      const VectorXd grad = gen.jacobian_vector_product(z, dw, mode);
      beta1_pow *= cfg.adam.beta1;
      beta2_pow *= cfg.adam.beta2;
      m1 = cfg.adam.beta1 * m1 + (1.0 - cfg.adam.beta1) * grad;
      m2 = cfg.adam.beta2 * m2 + (1.0 - cfg.adam.beta2) * grad.cwiseAbs2();
      const double lr1 = cfg.learning_rate / (1.0 - beta1_pow);
      const double bias2 = 1.0 - beta2_pow;
      for (Index i = 0; i < k; ++i) z[i] -= lr1 * m1[i] / (std::sqrt(m2[i] / bias2) + cfg.adam.epsilon);
      if (mode == DomainMode::strict) z = ball.clip(z);
    }
    if (rec.diverged) {
      rec.objective = std::numeric_limits<double>::infinity();
      if (rec.z.size() == 0) {
        rec.z = z;
        rec.w = VectorXd::Constant(gen.ambient_dim(), std::numeric_limits<double>::quiet_NaN());
      }
    }
    out.per_restart_objectives.push_back(rec.objective);
    out.restarts.push_back(std::move(rec));
  }

  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < out.restarts.size(); ++i) {
    if (out.restarts[i].diverged) continue;
    if (!best || out.restarts[i].objective < out.restarts[*best].objective) best = i;
  }
  out.all_diverged = !best.has_value();
  out.best_restart = best.value_or(0);
  const RestartOutcome& chosen = out.restarts[out.best_restart];
  out.z = chosen.z;
  out.w = chosen.w;
  out.objective = chosen.objective;
  return out;
}

ProjectionResult project_latent(const Generator& gen, const VectorXd& s, const ProjectionConfig& cfg) {
  if (s.size() != gen.ambient_dim())
    throw ValidationError("projection target has dimension " + std::to_string(s.size()) + ", expected " +
                          std::to_string(gen.ambient_dim()));
  // Adam descends 1/2 ||G(z) - s||^2; objectives are reported as ||G(z) - s||^2.
  RangeLoss loss = [&s](const VectorXd& w) {
    VectorXd residual = w - s;
    return std::pair<double, VectorXd>{residual.squaredNorm(), std::move(residual)};
  };
  return minimize_latent(gen, loss, cfg);
}

ProjectionResult project(const Generator& gen, const VectorXd& s, const ProjectionConfig& cfg) {
  if (cfg.method == ProjectionMethod::exact_linear) return project_exact_linear(gen, s);
  return project_latent(gen, s, cfg);
}

Projector::Projector(const Generator& gen, ProjectionConfig cfg) : gen_(gen), cfg_(cfg) {
  cfg_.validate();
  if (cfg_.method == ProjectionMethod::exact_linear && !gen_.is_linear())
    throw ValidationError("exact_linear projection needs a linear generator");
}

ProjectionResult Projector::operator()(const VectorXd& s) const {
  ++calls_;
  return project(gen_, s, cfg_);
}

}  // namespace oneshot
