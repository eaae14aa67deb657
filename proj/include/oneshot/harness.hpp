#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "oneshot/estimators.hpp"
#include "oneshot/generators.hpp"
#include "oneshot/metrics.hpp"
#include "oneshot/observation.hpp"

namespace oneshot {

/// A grid of synthetic recovery experiments. Config files use the same JSON
/// lexical format as generator files:
///
///   { "generator": "gen.json", "model": "noisy_one_bit", "sigmas": [1.0],
///     "ms": [50, 100], "trials": 2, "base_seed": 7, "output": "out.csv",
///     "estimators": [ {"kind": "one_shot", "projection": {...}}, ... ] }
///
/// Relative paths resolve against the config file's directory.
struct SweepConfig {
  std::filesystem::path generator_path;
  /// Takes precedence over generator_path when set.
  std::shared_ptr<const Generator> generator;
  ModelKind model_kind = ModelKind::noisy_one_bit;
  std::vector<double> sigmas;
  std::vector<Eigen::Index> ms;
  std::size_t trials = 1;
  std::vector<EstimatorSpec> estimators;
  std::uint64_t base_seed = 0;
  std::filesystem::path output;
  double delta = 0.01;  // reported bound annotations only
  std::size_t threads = 0;  // 0: ONESHOT_THREADS or all cores

  void validate() const;
  const Generator& resolve_generator();
};

SweepConfig parse_sweep_config(std::string_view text, const std::filesystem::path& base_dir = {});
SweepConfig load_sweep_config(const std::filesystem::path& path);

/// Seeds of a sweep: a bijective packing of (sigma index: 12 bits, m index:
/// 12 bits, trial: 32 bits, estimator: 8 bits) mixed with the base seed. The
/// estimator slot 0xFF is reserved for data shared by all estimators of a
/// cell, and sigma = m = 0xFFF for per-trial ground truth.
std::uint64_t sweep_seed(std::uint64_t base, std::size_t sigma_index, std::size_t m_index, std::size_t trial,
                         std::size_t estimator);
inline constexpr std::size_t kSharedSlot = 0xFF;

enum class Membership { exact, approximate };
std::string_view to_string(Membership m);

struct GroundTruth {
  Eigen::VectorXd z0;  // planted latent, uniform in the half-radius ball
  Eigen::VectorXd x;   // G(z0) / ||G(z0)||
  /// Exact when mu x = G(witness) for a witness inside the ball.
  Membership membership = Membership::approximate;
  std::optional<Eigen::VectorXd> witness;
};

GroundTruth plant_ground_truth(const Generator& gen, double mu, std::uint64_t seed);

struct ResultRow {
  std::string estimator;
  std::string model_kind;
  double sigma = 0.0;
  Eigen::Index m = 0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  double cosine_best = 0.0;
  double cosine_mean = 0.0;
  double l2_to_mux = 0.0;
  double runtime_ms = 0.0;
  std::string projection_mode;
  /// Ground-truth membership of mu x in the range. Kept in the sidecar, not
  /// in the results file.
  Membership membership = Membership::approximate;
};

/// Column order of results files.
inline constexpr std::string_view kResultHeader =
    "estimator,model_kind,sigma,m,trial,seed,cosine_best,cosine_mean,l2_to_mux,runtime_ms,projection_mode";

std::string format_row(const ResultRow& row);
std::vector<ResultRow> read_results(const std::filesystem::path& path);

struct SweepResult {
  std::vector<ResultRow> rows;
  std::vector<GroundTruth> truths;  // per trial
};

/// Executes every (sigma, m, trial, estimator) combination. Rows are written
/// in canonical grid order and flushed one at a time when cfg.output is set;
/// a sidecar `<output>.meta.json` records the config echo, Adam settings and
/// ground-truth membership.
SweepResult run_sweep(SweepConfig cfg);

struct RateRow {
  Eigen::Index m = 0;
  double mean_error = 0.0;
  double std_error = 0.0;
  double theory = 0.0;  // xi sqrt(k log(L r / delta) / m)
};

struct RateStudy {
  std::vector<RateRow> rows;
  RateFit fit;
  SimParameters parameters;
};

/// Mean ||x_hat - mu x|| of the first estimator per m (first sigma only) and
/// the log-log slope. Needs >= 4 values of m spanning >= 8x and >= 50 trials.
RateStudy run_rate_study(SweepConfig cfg);

enum class PlotAxis { m, sigma };

/// Mean cosine_best per x value, one series per estimator.
struct PlotTable {
  std::string name;
  std::string x_label;
  std::vector<std::string> series;
  std::vector<double> xs;
  std::vector<std::vector<double>> values;  // [x index][series index]

  std::string to_csv() const;
};

/// Groups rows by model and the fixed variable (sigma when plotting against
/// m and vice versa). Throws ValidationError on empty input.
std::vector<PlotTable> make_plot_tables(const std::vector<ResultRow>& rows, PlotAxis axis);

/// Writes each table to `<dir>/<name>.csv` and returns the paths.
std::vector<std::filesystem::path> emit_plot_data(const std::vector<ResultRow>& rows, PlotAxis axis,
                                                  const std::filesystem::path& dir);

/// Command-line entry point. Exit codes: 0 success, 1 validation or usage
/// error, 2 numerical failure.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace oneshot
