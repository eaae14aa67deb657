#include "oneshot/harness.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

#include "oneshot/diagnostics.hpp"
#include "oneshot/errors.hpp"
#include "oneshot/parallel.hpp"
#include "text_format.hpp"

namespace oneshot {

using Eigen::Index;
using Eigen::VectorXd;
using nlohmann::json;

namespace {

[[noreturn]] void field_error(const std::string& path, const std::string& what) {
  throw ValidationError(path + ": " + what);
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) field_error(path.empty() ? key : path + "." + key, "missing field");
  return *it;
}

double get_number(const json& v, const std::string& path) {
  if (!v.is_number()) field_error(path, "expected a number");
  return v.get<double>();
}

std::uint64_t get_unsigned(const json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
  field_error(path, "expected a non-negative integer");
}

std::string get_string(const json& v, const std::string& path) {
  if (!v.is_string()) field_error(path, "expected a string");
  return v.get<std::string>();
}

template <class F>
auto with_path(const std::string& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ValidationError& e) {
    field_error(path, e.what());
  }
}

ProjectionConfig parse_projection(const json& j, const std::string& path) {
  if (!j.is_object()) field_error(path, "expected an object");
  ProjectionConfig cfg;
  for (const auto& [key, value] : j.items()) {
    const std::string p = path + "." + key;
    if (key == "method") {
      cfg.method = with_path(p, [&] { return parse_projection_method(get_string(value, p)); });
    } else if (key == "steps") {
      cfg.steps = static_cast<int>(get_unsigned(value, p));
    } else if (key == "learning_rate") {
      cfg.learning_rate = get_number(value, p);
    } else if (key == "restarts") {
      cfg.restarts = static_cast<int>(get_unsigned(value, p));
    } else if (key == "domain_mode") {
      const std::string mode = get_string(value, p);
      if (mode == "strict") cfg.domain_mode = DomainMode::strict;
      else if (mode == "unchecked") cfg.domain_mode = DomainMode::unchecked;
      else field_error(p, "unknown domain mode '" + mode + "'");
    } else if (key == "adam") {
      if (!value.is_object()) field_error(p, "expected an object");
      if (value.contains("beta1")) cfg.adam.beta1 = get_number(value["beta1"], p + ".beta1");
      if (value.contains("beta2")) cfg.adam.beta2 = get_number(value["beta2"], p + ".beta2");
      if (value.contains("epsilon")) cfg.adam.epsilon = get_number(value["epsilon"], p + ".epsilon");
    } else {
      field_error(p, "unknown field");
    }
  }
  with_path(path, [&] { cfg.validate(); });
  return cfg;
}

EstimatorSpec parse_estimator(const json& j, const std::string& path) {
  if (!j.is_object()) field_error(path, "expected an object");
  EstimatorSpec spec;
  for (const auto& [key, value] : j.items()) {
    const std::string p = path + "." + key;
    if (key == "kind") {
      spec.kind = with_path(p, [&] { return parse_estimator_kind(get_string(value, p)); });
    } else if (key == "projection") {
      spec.projection = parse_projection(value, p);
    } else if (key == "iterations") {
      spec.iterations = static_cast<int>(get_unsigned(value, p));
    } else if (key == "step_size") {
      if (!value.is_null()) spec.step_size = get_number(value, p);
    } else if (key == "shrinkage") {
      spec.shrinkage = get_number(value, p);
    } else if (key == "ista_iters") {
      spec.ista_iters = static_cast<int>(get_unsigned(value, p));
    } else {
      field_error(p, "unknown field");
    }
  }
  if (!j.contains("kind")) field_error(path + ".kind", "missing field");
  with_path(path, [&] { spec.validate(); });
  return spec;
}

json projection_to_json(const ProjectionConfig& cfg) {
  return {{"method", to_string(cfg.method)},
          {"steps", cfg.steps},
          {"learning_rate", cfg.learning_rate},
          {"restarts", cfg.restarts},
          {"domain_mode", to_string(cfg.domain_mode)},
          {"adam", {{"beta1", cfg.adam.beta1}, {"beta2", cfg.adam.beta2}, {"epsilon", cfg.adam.epsilon}}}};
}

json estimator_to_json(const EstimatorSpec& spec) {
  json j = {{"kind", to_string(spec.kind)}, {"iterations", spec.iterations}};
  j["step_size"] = spec.step_size ? json(*spec.step_size) : json(nullptr);
  if (spec.kind == EstimatorKind::lasso_ista) {
    j["shrinkage"] = spec.shrinkage;
    j["ista_iters"] = spec.ista_iters;
  } else {
    j["projection"] = projection_to_json(spec.projection);
  }
  return j;
}

json config_to_json(const SweepConfig& cfg) {
  json estimators = json::array();
  for (const auto& e : cfg.estimators) estimators.push_back(estimator_to_json(e));
  return {{"generator", cfg.generator ? std::string("<in-memory>") : cfg.generator_path.generic_string()},
          {"model", to_string(cfg.model_kind)},
          {"sigmas", cfg.sigmas},
          {"ms", cfg.ms},
          {"trials", cfg.trials},
          {"base_seed", cfg.base_seed},
          {"delta", cfg.delta},
          {"estimators", estimators}};
}

double safe_cosine(const VectorXd& x, const VectorXd& v) {
  if (!(v.norm() > 0.0)) return 0.0;
  return cosine_similarity(x, v);
}

bool positively_homogeneous(const Generator& gen) {
  const MlpGenerator* mlp = gen.as_mlp();
  if (!mlp) return false;
  for (const auto& layer : mlp->layers()) {
    if (layer.bias.size() > 0 && layer.bias.cwiseAbs().maxCoeff() != 0.0) return false;
    if (layer.activation != Activation::relu && layer.activation != Activation::none) return false;
  }
  return true;
}

SimParameters parameters_for(const ObservationModel& model, Index n) {
  SimParameterOptions options;
  options.ambient_dim = n;
  return reference_parameters(model, options);
}

void check_membership(const Generator& gen, double mu, GroundTruth& truth) {
  truth.witness.reset();
  truth.membership = Membership::approximate;
  const double scale = mu / gen.forward(truth.z0).norm();
  // G(c z0) = c G(z0) for linear maps (any c) and for bias-free relu networks (c > 0).
  if (gen.is_linear() || (positively_homogeneous(gen) && scale > 0.0)) {
    VectorXd w = truth.z0 * scale;
    if (gen.domain().contains(w)) {
      truth.membership = Membership::exact;
      truth.witness = std::move(w);
    }
  }
}

void validate_grid_sizes(const SweepConfig& cfg) {
  if (cfg.sigmas.size() >= 0xFFF) throw ValidationError("sigmas: at most 4094 values");
  if (cfg.ms.size() >= 0xFFF) throw ValidationError("ms: at most 4094 values");
  if (cfg.trials > 0xFFFFFFFFull) throw ValidationError("trials: at most 2^32 - 1");
  if (cfg.estimators.size() >= kSharedSlot) throw ValidationError("estimators: at most 254 entries");
}

std::uint64_t truth_seed(std::uint64_t base, std::size_t trial) { return sweep_seed(base, 0xFFF, 0xFFF, trial, kSharedSlot); }

std::string format_fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.')) c = '_';
  return s;
}

}  // namespace

void SweepConfig::validate() const {
  if (!generator && generator_path.empty()) throw ValidationError("generator: missing generator path");
  if (sigmas.empty()) throw ValidationError("sigmas: grid must be non-empty");
  for (std::size_t i = 0; i < sigmas.size(); ++i)
    if (!(sigmas[i] >= 0.0) || !std::isfinite(sigmas[i]))
      throw ValidationError("sigmas[" + std::to_string(i) + "]: must be finite and >= 0");
  if (ms.empty()) throw ValidationError("ms: grid must be non-empty");
  for (std::size_t i = 0; i < ms.size(); ++i)
    if (ms[i] < 1) throw ValidationError("ms[" + std::to_string(i) + "]: must be >= 1");
  if (trials < 1) throw ValidationError("trials: must be >= 1");
  if (estimators.empty()) throw ValidationError("estimators: list must be non-empty");
  for (std::size_t i = 0; i < estimators.size(); ++i)
    with_path("estimators[" + std::to_string(i) + "]", [&] { estimators[i].validate(); });
  if (model_kind == ModelKind::custom) throw ValidationError("model: custom models cannot be swept from a config");
  if (!(delta > 0.0)) throw ValidationError("delta: must be > 0");
  validate_grid_sizes(*this);
}

const Generator& SweepConfig::resolve_generator() {
  if (!generator) {
    try {
      generator = std::make_shared<const Generator>(load_generator(generator_path));
    } catch (const ValidationError& e) {
      throw ValidationError(std::string("generator: ") + e.what());
    }
  }
  return *generator;
}

SweepConfig parse_sweep_config(std::string_view text, const std::filesystem::path& base_dir) {
  const json j = detail::parse_json(text);
  if (!j.is_object()) throw ValidationError("config: expected an object");
  SweepConfig cfg;
  std::filesystem::path gen = get_string(require(j, "generator", ""), "generator");
  cfg.generator_path = gen.is_absolute() || base_dir.empty() ? gen : base_dir / gen;
  cfg.model_kind = with_path("model", [&] { return parse_model_kind(get_string(require(j, "model", ""), "model")); });

  const json& sigmas = require(j, "sigmas", "");
  if (!sigmas.is_array()) field_error("sigmas", "expected an array");
  for (std::size_t i = 0; i < sigmas.size(); ++i)
    cfg.sigmas.push_back(get_number(sigmas[i], "sigmas[" + std::to_string(i) + "]"));

  const json& ms = require(j, "ms", "");
  if (!ms.is_array()) field_error("ms", "expected an array");
  for (std::size_t i = 0; i < ms.size(); ++i) {
    const std::string p = "ms[" + std::to_string(i) + "]";
    const std::uint64_t m = get_unsigned(ms[i], p);
    if (m < 1) field_error(p, "must be >= 1");
    cfg.ms.push_back(static_cast<Index>(m));
  }

  cfg.trials = static_cast<std::size_t>(get_unsigned(require(j, "trials", ""), "trials"));
  const json& ests = require(j, "estimators", "");
  if (!ests.is_array()) field_error("estimators", "expected an array");
  for (std::size_t i = 0; i < ests.size(); ++i)
    cfg.estimators.push_back(parse_estimator(ests[i], "estimators[" + std::to_string(i) + "]"));

  if (j.contains("base_seed")) cfg.base_seed = get_unsigned(j["base_seed"], "base_seed");
  if (j.contains("output")) {
    std::filesystem::path out = get_string(j["output"], "output");
    cfg.output = out.is_absolute() || base_dir.empty() ? out : base_dir / out;
  }
  if (j.contains("delta")) cfg.delta = get_number(j["delta"], "delta");
  static const char* known[] = {"generator", "model", "sigmas", "ms", "trials", "estimators", "base_seed", "output", "delta"};
  for (const auto& [key, value] : j.items())
    if (std::find(std::begin(known), std::end(known), key) == std::end(known)) field_error(key, "unknown field");
  cfg.validate();
  return cfg;
}

SweepConfig load_sweep_config(const std::filesystem::path& path) {
  const std::string text = detail::read_file(path);
  return parse_sweep_config(text, path.parent_path());
}

std::uint64_t sweep_seed(std::uint64_t base, std::size_t sigma_index, std::size_t m_index, std::size_t trial,
                         std::size_t estimator) {
  const std::uint64_t packed = (static_cast<std::uint64_t>(sigma_index & 0xFFF) << 52) |
                               (static_cast<std::uint64_t>(m_index & 0xFFF) << 40) |
                               (static_cast<std::uint64_t>(trial & 0xFFFFFFFFull) << 8) |
                               static_cast<std::uint64_t>(estimator & 0xFF);
  return mix64(base ^ mix64(packed));
}

std::string_view to_string(Membership m) { return m == Membership::exact ? "exact" : "approximate"; }

GroundTruth plant_ground_truth(const Generator& gen, double mu, std::uint64_t seed) {
  Rng rng(seed);
  GroundTruth truth;
  for (int attempt = 0; attempt < 100; ++attempt) {
    truth.z0 = rng.uniform_in_ball(gen.latent_dim(), 0.5 * gen.radius());
    const VectorXd v = gen.forward(truth.z0);
    const double norm = v.norm();
    if (norm > 0.0 && std::isfinite(norm)) {
      truth.x = v / norm;
      check_membership(gen, mu, truth);
      return truth;
    }
  }
  throw NumericalError("plant_ground_truth: generator output vanished for 100 latent draws");
}

std::string format_row(const ResultRow& r) {
  std::string s;
  s += r.estimator;
  s += ',' + r.model_kind;
  s += ',' + detail::format_double(r.sigma);
  s += ',' + std::to_string(r.m);
  s += ',' + std::to_string(r.trial);
  s += ',' + std::to_string(r.seed);
  s += ',' + detail::format_double(r.cosine_best);
  s += ',' + detail::format_double(r.cosine_mean);
  s += ',' + detail::format_double(r.l2_to_mux);
  s += ',' + format_fixed3(r.runtime_ms);
  s += ',' + r.projection_mode;
  return s;
}

std::vector<ResultRow> read_results(const std::filesystem::path& path) {
  std::istringstream in(detail::read_file(path));
  std::string line;
  if (!std::getline(in, line) || line != kResultHeader)
    throw ParseError(path.string() + ": missing or unexpected header");
  std::vector<ResultRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 11)
      throw ParseError(path.string() + ": line " + std::to_string(line_no) + ": expected 11 columns");
    try {
      ResultRow r;
      r.estimator = cells[0];
      r.model_kind = cells[1];
      r.sigma = std::stod(cells[2]);
      r.m = std::stoll(cells[3]);
      r.trial = std::stoull(cells[4]);
      r.seed = std::stoull(cells[5]);
      r.cosine_best = std::stod(cells[6]);
      r.cosine_mean = std::stod(cells[7]);
      r.l2_to_mux = std::stod(cells[8]);
      r.runtime_ms = std::stod(cells[9]);
      r.projection_mode = cells[10];
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw ParseError(path.string() + ": line " + std::to_string(line_no) + ": malformed number");
    }
  }
  return rows;
}

SweepResult run_sweep(SweepConfig cfg) {
  cfg.validate();
  const Generator& gen = cfg.resolve_generator();
  const Index n = gen.ambient_dim();

  std::vector<ObservationModel> models;
  std::vector<double> mus;
  for (double sigma : cfg.sigmas) {
    models.emplace_back(cfg.model_kind, sigma);
    mus.push_back(parameters_for(models.back(), n).mu);
  }

  SweepResult result;
  // Ground truth is shared by every sigma, m and estimator of a trial;
  // membership depends on mu and so on sigma.
  std::vector<std::vector<GroundTruth>> truths(cfg.sigmas.size());
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    GroundTruth base = plant_ground_truth(gen, mus.front(), truth_seed(cfg.base_seed, t));
    for (std::size_t si = 0; si < cfg.sigmas.size(); ++si) {
      GroundTruth g = base;
      check_membership(gen, mus[si], g);
      truths[si].push_back(std::move(g));
    }
    result.truths.push_back(std::move(base));
  }

  std::ofstream out;
  if (!cfg.output.empty()) {
    if (cfg.output.has_parent_path()) std::filesystem::create_directories(cfg.output.parent_path());
    json meta = {{"config", config_to_json(cfg)},
                 {"adam_defaults", {{"beta1", 0.9}, {"beta2", 0.999}, {"epsilon", 1e-8}}},
                 {"lipschitz_bound", gen.lipschitz_bound()},
                 {"columns", std::string(kResultHeader)}};
    json membership = json::array();
    for (std::size_t si = 0; si < cfg.sigmas.size(); ++si)
      for (std::size_t t = 0; t < cfg.trials; ++t)
        membership.push_back({{"sigma", cfg.sigmas[si]}, {"trial", t}, {"mu", mus[si]},
                              {"membership", to_string(truths[si][t].membership)}});
    meta["membership"] = membership;
    std::ofstream meta_out(cfg.output.string() + ".meta.json", std::ios::binary);
    if (!meta_out) throw ValidationError("output: cannot write '" + cfg.output.string() + ".meta.json'");
    meta_out << meta.dump(2) << '\n';

    out.open(cfg.output, std::ios::binary);
    if (!out) throw ValidationError("output: cannot write '" + cfg.output.string() + "'");
    out << kResultHeader << '\n';
    out.flush();
  }

  const std::size_t n_sigma = cfg.sigmas.size(), n_m = cfg.ms.size(), n_est = cfg.estimators.size();
  const std::size_t cells = n_sigma * n_m * cfg.trials;
  std::vector<std::vector<ResultRow>> done(cells);
  std::vector<char> ready(cells, 0);
  std::size_t next_to_write = 0;
  std::mutex writer;

  parallel_for(
      cells,
      [&](std::size_t cell) {
        const std::size_t t = cell % cfg.trials;
        const std::size_t mi = (cell / cfg.trials) % n_m;
        const std::size_t si = cell / (cfg.trials * n_m);
        const GroundTruth& truth = truths[si][t];
        const MeasurementEnsemble ensemble =
            sample_ensemble(truth.x, cfg.ms[mi], models[si], sweep_seed(cfg.base_seed, si, mi, t, kSharedSlot));

        std::vector<ResultRow> rows;
        for (std::size_t ei = 0; ei < n_est; ++ei) {
          EstimatorSpec spec = cfg.estimators[ei];
          const std::uint64_t seed = sweep_seed(cfg.base_seed, si, mi, t, ei);
          spec.projection.restart_seed = seed;
          const RecoveryResult rec = recover(ensemble, &gen, spec, mus[si]);

          ResultRow row;
          row.estimator = std::string(to_string(spec.kind));
          row.model_kind = std::string(to_string(cfg.model_kind));
          row.sigma = cfg.sigmas[si];
          row.m = cfg.ms[mi];
          row.trial = t;
          row.seed = seed;
          row.cosine_best = safe_cosine(truth.x, rec.estimate);
          double sum = 0.0;
          for (const auto& v : rec.restart_estimates) sum += safe_cosine(truth.x, v);
          row.cosine_mean = rec.restart_estimates.empty() ? row.cosine_best
                                                          : sum / static_cast<double>(rec.restart_estimates.size());
          row.l2_to_mux = error_to_scaled_target(rec.estimate, truth.x, mus[si]);
          row.runtime_ms = rec.runtime_ms;
          row.projection_mode = rec.projection_mode;
          row.membership = truth.membership;
          rows.push_back(std::move(row));
        }

        std::lock_guard lock(writer);
        done[cell] = std::move(rows);
        ready[cell] = 1;
        while (next_to_write < cells && ready[next_to_write]) {
          if (out.is_open()) {
            for (const auto& r : done[next_to_write]) {
              out << format_row(r) << '\n';
              out.flush();
            }
          }
          ++next_to_write;
        }
      },
      cfg.threads);

  for (auto& rows : done)
    for (auto& r : rows) result.rows.push_back(std::move(r));
  return result;
}

RateStudy run_rate_study(SweepConfig cfg) {
  if (cfg.estimators.empty()) {
    EstimatorSpec spec;
    spec.projection.method = ProjectionMethod::latent_adam;
    cfg.estimators.push_back(spec);
  }
  cfg.validate();
  if (cfg.trials < 50) throw ValidationError("trials: rate study needs >= 50 trials per m");
  std::vector<Index> ms = cfg.ms;
  std::sort(ms.begin(), ms.end());
  if (std::adjacent_find(ms.begin(), ms.end()) != ms.end()) throw ValidationError("ms: values must be distinct");
  if (ms.size() < 4) throw ValidationError("ms: rate study needs >= 4 values of m");
  if (ms.back() < 8 * ms.front()) throw ValidationError("ms: rate study grid must span at least a factor of 8");

  const Generator& gen = cfg.resolve_generator();
  const ObservationModel model(cfg.model_kind, cfg.sigmas.front());
  RateStudy study;
  study.parameters = parameters_for(model, gen.ambient_dim());
  const double mu = study.parameters.mu;

  std::vector<GroundTruth> truths;
  for (std::size_t t = 0; t < cfg.trials; ++t)
    truths.push_back(plant_ground_truth(gen, mu, truth_seed(cfg.base_seed, t)));

  const std::size_t n_m = cfg.ms.size();
  std::vector<double> errors(n_m * cfg.trials);
  parallel_for(
      errors.size(),
      [&](std::size_t idx) {
        const std::size_t mi = idx / cfg.trials, t = idx % cfg.trials;
        const MeasurementEnsemble e =
            sample_ensemble(truths[t].x, cfg.ms[mi], model, sweep_seed(cfg.base_seed, 0, mi, t, kSharedSlot));
        EstimatorSpec spec = cfg.estimators.front();
        spec.projection.restart_seed = sweep_seed(cfg.base_seed, 0, mi, t, 0);
        const RecoveryResult r = recover(e, &gen, spec, mu);
        errors[idx] = error_to_scaled_target(r.estimate, truths[t].x, mu);
      },
      cfg.threads);

  const double xi = std::sqrt(study.parameters.xi_sq);
  std::vector<RatePoint> points;
  for (std::size_t mi = 0; mi < n_m; ++mi) {
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t t = 0; t < cfg.trials; ++t) {
      const double v = errors[mi * cfg.trials + t];
      sum += v;
      sum_sq += v * v;
    }
    const double n = static_cast<double>(cfg.trials);
    RateRow row;
    row.m = cfg.ms[mi];
    row.mean_error = sum / n;
    row.std_error = std::sqrt(std::max(0.0, (sum_sq - n * row.mean_error * row.mean_error) / (n - 1.0)) / n);
    row.theory = predicted_rate_bound(xi, gen.latent_dim(), gen.lipschitz_bound(), gen.radius(), cfg.delta,
                                    static_cast<double>(row.m));
    study.rows.push_back(row);
    points.push_back({static_cast<double>(row.m), row.mean_error});
  }
  std::sort(study.rows.begin(), study.rows.end(), [](const RateRow& a, const RateRow& b) { return a.m < b.m; });
  study.fit = fit_rate_slope(points);
  return study;
}

std::string PlotTable::to_csv() const {
  std::string s = x_label;
  for (const auto& name : series) s += ",mean_cosine_" + name;
  s += '\n';
  for (std::size_t i = 0; i < xs.size(); ++i) {
    s += detail::format_double(xs[i]);
    for (double v : values[i]) s += ',' + detail::format_double(v);
    s += '\n';
  }
  return s;
}

std::vector<PlotTable> make_plot_tables(const std::vector<ResultRow>& rows, PlotAxis axis) {
  if (rows.empty()) throw ValidationError("emit_plot_data: results are empty");
  // (model, fixed value) -> x -> estimator -> (sum, count)
  using Cell = std::pair<double, std::size_t>;
  std::map<std::pair<std::string, double>, std::map<double, std::map<std::string, Cell>>> groups;
  std::map<std::pair<std::string, double>, std::vector<std::string>> order;
  for (const auto& r : rows) {
    const double fixed = axis == PlotAxis::m ? r.sigma : static_cast<double>(r.m);
    const double x = axis == PlotAxis::m ? static_cast<double>(r.m) : r.sigma;
    const auto key = std::make_pair(r.model_kind, fixed);
    auto& cell = groups[key][x][r.estimator];
    cell.first += r.cosine_best;
    ++cell.second;
    auto& names = order[key];
    if (std::find(names.begin(), names.end(), r.estimator) == names.end()) names.push_back(r.estimator);
  }

  std::vector<PlotTable> tables;
  for (const auto& [key, by_x] : groups) {
    PlotTable table;
    table.x_label = axis == PlotAxis::m ? "m" : "sigma";
    table.name = axis == PlotAxis::m
                     ? "cosine_vs_m_" + key.first + "_sigma_" + sanitize(detail::format_double(key.second))
                     : "cosine_vs_sigma_" + key.first + "_m_" + std::to_string(static_cast<long long>(key.second));
    table.series = order[key];
    for (const auto& [x, by_est] : by_x) {
      std::vector<double> values;
      for (const auto& name : table.series) {
        auto it = by_est.find(name);
        if (it == by_est.end() || it->second.second == 0)
          throw ValidationError("emit_plot_data: empty group for estimator '" + name + "'");
        values.push_back(it->second.first / static_cast<double>(it->second.second));
      }
      table.xs.push_back(x);
      table.values.push_back(std::move(values));
    }
    tables.push_back(std::move(table));
  }
  return tables;
}

std::vector<std::filesystem::path> emit_plot_data(const std::vector<ResultRow>& rows, PlotAxis axis,
                                                  const std::filesystem::path& dir) {
  const auto tables = make_plot_tables(rows, axis);
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> paths;
  for (const auto& table : tables) {
    const auto path = dir / (table.name + ".csv");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + path.string() + "'");
    out << table.to_csv();
    paths.push_back(path);
  }
  return paths;
}

}  // namespace oneshot
