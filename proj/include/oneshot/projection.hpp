#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "oneshot/generators.hpp"

namespace oneshot {

enum class ProjectionMethod { exact_linear, latent_adam };

std::string_view to_string(ProjectionMethod method);
ProjectionMethod parse_projection_method(std::string_view name);

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct ProjectionConfig {
  ProjectionMethod method = ProjectionMethod::latent_adam;
  int steps = 100;
  double learning_rate = 0.1;
  int restarts = 10;
  std::uint64_t restart_seed = 0;
  /// strict: latent iterates are radially re-projected onto the ball after
  /// every step. unchecked: the ball is ignored.
  DomainMode domain_mode = DomainMode::strict;
  AdamOptions adam;

  void validate() const;
  /// "exact_linear", "latent_adam:strict" or "latent_adam:unchecked".
  std::string mode_label() const;
};

/// One restart of a latent search.
struct RestartOutcome {
  Eigen::VectorXd z;   // best iterate along the trajectory
  Eigen::VectorXd w;   // G(z)
  double objective = 0.0;          // at the best iterate
  double initial_objective = 0.0;  // at the starting point
  double final_objective = 0.0;    // at the last iterate
  bool diverged = false;
};

struct ProjectionResult {
  Eigen::VectorXd w;  // range point
  Eigen::VectorXd z;  // latent witness, w = G(z)
  double objective = 0.0;  // ||w - s||^2
  std::vector<double> per_restart_objectives;
  std::vector<RestartOutcome> restarts;  // empty for exact projections
  std::size_t best_restart = 0;
  bool all_diverged = false;
  /// KKT multiplier of the ball constraint (exact projection only).
  std::optional<double> multiplier;
  ProjectionMethod method = ProjectionMethod::exact_linear;
  DomainMode domain_mode = DomainMode::strict;
};

/// argmin_{||z|| <= r} ||B z - s||_2, solved globally.
///
/// The minimum-norm least-squares solution is returned when it lies in the
/// ball. Otherwise the multiplier lambda > 0 with
/// ||(B^T B + lambda I)^{-1} B^T s|| = r is bracketed in [0, ||B^T s|| / r]
/// and bisected (200 iterations) on the SVD of B, keeping the feasible end.
ProjectionResult project_exact_linear(const LinearGenerator& gen, const Eigen::VectorXd& s);
/// Throws ValidationError unless `gen` is linear.
ProjectionResult project_exact_linear(const Generator& gen, const Eigen::VectorXd& s);

/// Restarted Adam on 1/2 ||G(z) - s||^2 in latent space. Each restart starts
/// from z ~ N(0, I_k) drawn from derive_seed(restart_seed, {restart}) and keeps
/// the best iterate it visits. The lowest objective wins; ties go to the lowest
/// restart index. Diverged restarts are skipped unless every restart diverged.
ProjectionResult project_latent(const Generator& gen, const Eigen::VectorXd& s, const ProjectionConfig& cfg);

/// Dispatch on cfg.method.
ProjectionResult project(const Generator& gen, const Eigen::VectorXd& s, const ProjectionConfig& cfg);

/// A squared-norm loss on the range point w: returns its value and the
/// gradient of half the value with respect to w.
using RangeLoss = std::function<std::pair<double, Eigen::VectorXd>(const Eigen::VectorXd& w)>;

/// Restarted Adam on loss(G(z)); shared by latent projection and CSGM.
/// Returned objectives are those of `loss`.
ProjectionResult minimize_latent(const Generator& gen, const RangeLoss& loss, const ProjectionConfig& cfg);

/// A projection operator bound to a generator and config that counts calls.
class Projector {
 public:
  Projector(const Generator& gen, ProjectionConfig cfg);

  ProjectionResult operator()(const Eigen::VectorXd& s) const;
  std::size_t calls() const { return calls_.load(); }
  const ProjectionConfig& config() const { return cfg_; }
  const Generator& generator() const { return gen_; }

 private:
  const Generator& gen_;
  ProjectionConfig cfg_;
  mutable std::atomic<std::size_t> calls_{0};
};

}  // namespace oneshot
