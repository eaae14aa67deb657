#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "oneshot/generators.hpp"
#include "oneshot/observation.hpp"
#include "oneshot/projection.hpp"

namespace oneshot {

enum class EstimatorKind { one_shot, bipg, pgd, csgm, lasso_ista };

std::string_view to_string(EstimatorKind kind);
EstimatorKind parse_estimator_kind(std::string_view name);

struct EstimatorSpec {
  EstimatorKind kind = EstimatorKind::one_shot;
  ProjectionConfig projection;
  int iterations = 30;               // T for bipg / pgd
  std::optional<double> step_size;   // lambda; empty means 1/m
  double shrinkage = 0.1;            // lasso_ista only
  int ista_iters = 500;

  void validate() const;
  double resolved_step(Eigen::Index m) const { return step_size ? *step_size : 1.0 / static_cast<double>(m); }
  /// Whether the estimate is constrained to the generator range.
  bool uses_generator() const { return kind != EstimatorKind::lasso_ista; }
};

struct RecoveryResult {
  Eigen::VectorXd estimate;
  std::optional<Eigen::VectorXd> latent;
  /// bipg / pgd: ||x_t - mu x|| when mu is supplied, else (1/sqrt m)||residual||.
  /// lasso_ista: objective per iteration. csgm: per-restart objectives.
  std::vector<double> iterate_history;
  /// Candidate estimates of every restart of the last projection, used for
  /// the mean-over-restarts score. A single entry for deterministic methods.
  std::vector<Eigen::VectorXd> restart_estimates;
  double runtime_ms = 0.0;
  EstimatorSpec spec;
  std::uint64_t seed = 0;  // ensemble seed
  std::size_t projection_calls = 0;
  std::string projection_mode;
};

/// P_G((1/m) A^T y), with exactly one projection.
RecoveryResult one_shot(const MeasurementEnsemble& ensemble, const Generator& gen, const ProjectionConfig& cfg);

/// x_{t+1} = P_G(x_t + lambda A^T (y - sign(A x_t))), x_0 = 0, sign(0) = 0.
/// Rejects observations outside {-1, 0, +1}.
RecoveryResult bipg(const MeasurementEnsemble& ensemble, const Generator& gen, const EstimatorSpec& spec,
                    std::optional<double> mu = std::nullopt);

/// x_{t+1} = P_G(x_t + lambda A^T (y - A x_t)), x_0 = 0.
RecoveryResult pgd(const MeasurementEnsemble& ensemble, const Generator& gen, const EstimatorSpec& spec,
                   std::optional<double> mu = std::nullopt);

/// min over the latent ball of ||A G(z) - y||^2 by restarted Adam.
RecoveryResult csgm(const MeasurementEnsemble& ensemble, const Generator& gen, const EstimatorSpec& spec);

/// ISTA on (1/2m)||A x - y||^2 + shrinkage ||x||_1 with step m / ||A||_2^2.
RecoveryResult lasso_ista(const MeasurementEnsemble& ensemble, const EstimatorSpec& spec);

/// Dispatch on spec.kind. `gen` may be null only for lasso_ista.
RecoveryResult recover(const MeasurementEnsemble& ensemble, const Generator* gen, const EstimatorSpec& spec,
                       std::optional<double> mu = std::nullopt);

}  // namespace oneshot
