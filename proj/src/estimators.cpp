#include "oneshot/estimators.hpp"

#include <chrono>
#include <cmath>

#include "oneshot/errors.hpp"
#include "oneshot/linalg.hpp"

namespace oneshot {

using Eigen::Index;
using Eigen::VectorXd;

std::string_view to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::one_shot: return "one_shot";
    case EstimatorKind::bipg: return "bipg";
    case EstimatorKind::pgd: return "pgd";
    case EstimatorKind::csgm: return "csgm";
    case EstimatorKind::lasso_ista: return "lasso_ista";
  }
  return "one_shot";
}

EstimatorKind parse_estimator_kind(std::string_view name) {
  if (name == "one_shot" || name == "oneshot" || name == "one-shot") return EstimatorKind::one_shot;
  if (name == "bipg") return EstimatorKind::bipg;
  if (name == "pgd") return EstimatorKind::pgd;
  if (name == "csgm") return EstimatorKind::csgm;
  if (name == "lasso_ista" || name == "lasso") return EstimatorKind::lasso_ista;
  throw ValidationError("unknown estimator '" + std::string(name) + "'");
}

void EstimatorSpec::validate() const {
  if (uses_generator()) projection.validate();
  if ((kind == EstimatorKind::bipg || kind == EstimatorKind::pgd) && iterations < 1)
    throw ValidationError("iterations T must be >= 1");
  if (step_size && (!(*step_size > 0.0) || !std::isfinite(*step_size)))
    throw ValidationError("step_size must be > 0");
  if (!(shrinkage >= 0.0) || !std::isfinite(shrinkage)) throw ValidationError("shrinkage must be >= 0");
  if (kind == EstimatorKind::lasso_ista && ista_iters < 1) throw ValidationError("ista_iters must be >= 1");
}

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void check_dimensions(const MeasurementEnsemble& e, const Generator* gen) {
  if (e.y.size() != e.a.rows()) throw ValidationError("observations and design disagree on m");
  if (e.a.rows() < 1) throw ValidationError("ensemble has no measurements");
  if (gen && gen->ambient_dim() != e.a.cols())
    throw ValidationError("generator ambient dimension " + std::to_string(gen->ambient_dim()) +
                          " does not match design with n = " + std::to_string(e.a.cols()));
}

void require_finite(const RecoveryResult& r, std::string_view what) {
  if (!r.estimate.allFinite()) throw NumericalError(std::string(what) + ": non-finite estimate");
}

void fill_from_projection(RecoveryResult& out, const ProjectionResult& p) {
  out.estimate = p.w;
  out.latent = p.z;
  out.restart_estimates.clear();
  if (p.restarts.empty()) {
    out.restart_estimates.push_back(p.w);
  } else {
    for (const auto& r : p.restarts)
      if (!r.diverged) out.restart_estimates.push_back(r.w);
  }
}

// Shared loop of bipg and pgd; `binary` selects the residual y - sign(Ax).
RecoveryResult projected_iterations(const MeasurementEnsemble& e, const Generator& gen, const EstimatorSpec& spec,
                                    std::optional<double> mu, bool binary, std::string_view name) {
  const auto start = Clock::now();
  spec.validate();
  check_dimensions(e, &gen);
  Projector projector(gen, spec.projection);
  const double lambda = spec.resolved_step(e.m());
  const double root_m = std::sqrt(static_cast<double>(e.m()));

  RecoveryResult out;
  out.spec = spec;
  out.seed = e.seed;
  out.projection_mode = spec.projection.mode_label();
  VectorXd x = VectorXd::Zero(e.n());
  for (int t = 0; t < spec.iterations; ++t) {
    const VectorXd ax = e.a * x;
    const VectorXd residual = binary ? VectorXd(e.y - ax.unaryExpr([](double v) { return sign0(v); }))
                                     : VectorXd(e.y - ax);
    const VectorXd step = lambda * (e.a.transpose() * residual);
    const VectorXd target = x + step;
    const ProjectionResult p = projector(target);
    if (p.all_diverged) throw NumericalError(std::string(name) + ": every projection restart diverged");
    fill_from_projection(out, p);
    x = p.w;
    if (mu) {
      out.iterate_history.push_back((x - *mu * e.x).norm());
    } else {
      const VectorXd ax_next = e.a * x;
      const VectorXd r = binary ? VectorXd(e.y - ax_next.unaryExpr([](double v) { return sign0(v); }))
                                : VectorXd(e.y - ax_next);
      out.iterate_history.push_back(r.norm() / root_m);
    }
  }
  out.projection_calls = projector.calls();
  out.runtime_ms = elapsed_ms(start);
  require_finite(out, name);
  return out;
}

}  // namespace

RecoveryResult one_shot(const MeasurementEnsemble& e, const Generator& gen, const ProjectionConfig& cfg) {
  const auto start = Clock::now();
  check_dimensions(e, &gen);
  Projector projector(gen, cfg);
  const double lambda = 1.0 / static_cast<double>(e.m());
  const VectorXd s = lambda * (e.a.transpose() * e.y);
  const ProjectionResult p = projector(s);
  if (p.all_diverged) throw NumericalError("one_shot: every projection restart diverged");

  RecoveryResult out;
  out.spec.kind = EstimatorKind::one_shot;
  out.spec.projection = cfg;
  out.seed = e.seed;
  out.projection_mode = cfg.mode_label();
  fill_from_projection(out, p);
  out.projection_calls = projector.calls();
  out.runtime_ms = elapsed_ms(start);
  require_finite(out, "one_shot");
  return out;
}

RecoveryResult bipg(const MeasurementEnsemble& e, const Generator& gen, const EstimatorSpec& spec,
                    std::optional<double> mu) {
  for (Index i = 0; i < e.y.size(); ++i) {
    const double v = e.y[i];
    if (v != 1.0 && v != -1.0 && v != 0.0)
      throw ValidationError("bipg needs binary observations; y[" + std::to_string(i) + "] = " + std::to_string(v));
  }
  RecoveryResult out = projected_iterations(e, gen, spec, mu, true, "bipg");
  out.spec.kind = EstimatorKind::bipg;
  return out;
}

RecoveryResult pgd(const MeasurementEnsemble& e, const Generator& gen, const EstimatorSpec& spec,
                   std::optional<double> mu) {
  RecoveryResult out = projected_iterations(e, gen, spec, mu, false, "pgd");
  out.spec.kind = EstimatorKind::pgd;
  return out;
}

RecoveryResult csgm(const MeasurementEnsemble& e, const Generator& gen, const EstimatorSpec& spec) {
  const auto start = Clock::now();
  spec.validate();
  check_dimensions(e, &gen);
  RangeLoss loss = [&e](const VectorXd& w) {
    const VectorXd residual = e.a * w - e.y;
    return std::pair<double, VectorXd>{residual.squaredNorm(), e.a.transpose() * residual};
  };
  const ProjectionResult p = minimize_latent(gen, loss, spec.projection);
  if (p.all_diverged) throw NumericalError("csgm: every restart diverged");

  RecoveryResult out;
  out.spec = spec;
  out.spec.kind = EstimatorKind::csgm;
  out.seed = e.seed;
  out.projection_mode = "latent_adam:" + std::string(to_string(spec.projection.domain_mode));
  fill_from_projection(out, p);
  out.iterate_history = p.per_restart_objectives;
  out.runtime_ms = elapsed_ms(start);
  require_finite(out, "csgm");
  return out;
}

RecoveryResult lasso_ista(const MeasurementEnsemble& e, const EstimatorSpec& spec) {
  const auto start = Clock::now();
  spec.validate();
  check_dimensions(e, nullptr);
  const double m = static_cast<double>(e.m());
  const double norm_a = spectral_norm(e.a).value;
  const double lipschitz = norm_a * norm_a / m;

  RecoveryResult out;
  out.spec = spec;
  out.spec.kind = EstimatorKind::lasso_ista;
  out.seed = e.seed;
  out.projection_mode = "none";
  VectorXd x = VectorXd::Zero(e.n());
  if (lipschitz > 0.0) {
    const double step = 1.0 / lipschitz;
    const double threshold = step * spec.shrinkage;
    for (int it = 0; it < spec.ista_iters; ++it) {
      const VectorXd grad = e.a.transpose() * (e.a * x - e.y) / m;
      x = (x - step * grad).unaryExpr([threshold](double v) {
        return v > threshold ? v - threshold : (v < -threshold ? v + threshold : 0.0);
      });
      out.iterate_history.push_back(0.5 * (e.a * x - e.y).squaredNorm() / m + spec.shrinkage * x.lpNorm<1>());
    }
  }
  out.estimate = x;
  out.restart_estimates = {x};
  out.runtime_ms = elapsed_ms(start);
  require_finite(out, "lasso_ista");
  return out;
}

RecoveryResult recover(const MeasurementEnsemble& e, const Generator* gen, const EstimatorSpec& spec,
                       std::optional<double> mu) {
  if (spec.uses_generator() && !gen) throw ValidationError(std::string(to_string(spec.kind)) + " needs a generator");
  switch (spec.kind) {
    case EstimatorKind::one_shot: {
      RecoveryResult out = one_shot(e, *gen, spec.projection);
      out.spec = spec;
      return out;
    }
    case EstimatorKind::bipg: return bipg(e, *gen, spec, mu);
    case EstimatorKind::pgd: return pgd(e, *gen, spec, mu);
    case EstimatorKind::csgm: return csgm(e, *gen, spec);
    case EstimatorKind::lasso_ista: return lasso_ista(e, spec);
  }
  throw ValidationError("unknown estimator");
}

}  // namespace oneshot
