#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "oneshot/diagnostics.hpp"
#include "oneshot/errors.hpp"
#include "oneshot/harness.hpp"
#include "text_format.hpp"

namespace oneshot {

using Eigen::Index;
using Eigen::VectorXd;
using nlohmann::json;

namespace {

json vector_json(const VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

VectorXd read_vector_file(const std::filesystem::path& path) {
  const json j = detail::parse_json(detail::read_file(path));
  const json* arr = &j;
  if (j.is_object()) {
    if (!j.contains("s")) throw ValidationError(path.string() + ": expected an array or an object with field 's'");
    arr = &j["s"];
  }
  if (!arr->is_array() || arr->empty()) throw ValidationError(path.string() + ": expected a non-empty array");
  VectorXd v(static_cast<Index>(arr->size()));
  for (std::size_t i = 0; i < arr->size(); ++i) {
    if (!(*arr)[i].is_number()) throw ValidationError(path.string() + ": entry " + std::to_string(i) + " is not a number");
    v[static_cast<Index>(i)] = (*arr)[i].get<double>();
  }
  return v;
}

void write_text(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot write '" + path + "'");
  f << text;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

VectorXd random_unit(Index n, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {0x78}));
  VectorXd x = rng.normal_vector(n);
  return x / x.norm();
}

struct ProjectionFlags {
  std::string method = "latent_adam";
  int steps = 100;
  double lr = 0.1;
  int restarts = 10;
  std::string domain = "strict";

  void add(CLI::App* app) {
    app->add_option("--projection", method, "exact_linear or latent_adam");
    app->add_option("--steps", steps, "Adam steps per restart");
    app->add_option("--lr", lr, "Adam learning rate");
    app->add_option("--restarts", restarts, "random restarts");
    app->add_option("--domain-mode", domain, "strict or unchecked");
  }

  ProjectionConfig build(std::uint64_t seed) const {
    ProjectionConfig cfg;
    cfg.method = parse_projection_method(method);
    cfg.steps = steps;
    cfg.learning_rate = lr;
    cfg.restarts = restarts;
    cfg.restart_seed = seed;
    if (domain == "strict") cfg.domain_mode = DomainMode::strict;
    else if (domain == "unchecked") cfg.domain_mode = DomainMode::unchecked;
    else throw ValidationError("--domain-mode: unknown mode '" + domain + "'");
    cfg.validate();
    return cfg;
  }
};

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Non-iterative signal recovery under generative priors"};
  app.name("oneshot");
  app.require_subcommand(1);

  std::uint64_t seed = 0;  // every subcommand takes --seed

  std::string model_name = "noisy_one_bit";
  double sigma = 0.0;

  auto* params = app.add_subcommand("params", "print SIM characterization parameters");
  std::string method_name = "analytic";
  std::size_t samples = 1'000'000;
  Index param_n = 100;
  params->add_option("--model", model_name)->required();
  params->add_option("--sigma", sigma);
  params->add_option("--method", method_name, "analytic, quadrature or monte_carlo");
  params->add_option("--samples", samples, "Monte Carlo draws");
  params->add_option("--n", param_n, "ambient dimension (signal-noise models)");
  params->add_option("--seed", seed);

  auto* simulate = app.add_subcommand("simulate", "emit a measurement ensemble as JSON");
  Index m = 100, n = 50;
  std::string generator_path, output_path;
  simulate->add_option("--model", model_name)->required();
  simulate->add_option("--sigma", sigma);
  simulate->add_option("--m", m);
  simulate->add_option("--n", n, "ambient dimension when no generator is given");
  simulate->add_option("--generator", generator_path, "plant x in this generator's range");
  simulate->add_option("--output", output_path);
  simulate->add_option("--seed", seed);

  auto* project_cmd = app.add_subcommand("project", "project a vector file onto a generator range");
  std::string input_path;
  ProjectionFlags pflags;
  project_cmd->add_option("--generator", generator_path)->required();
  project_cmd->add_option("--input", input_path, "JSON array, or object with field s")->required();
  project_cmd->add_option("--output", output_path);
  project_cmd->add_option("--seed", seed);
  pflags.add(project_cmd);

  auto* recover_cmd = app.add_subcommand("recover", "single recovery from a planted ground truth");
  std::string estimator_name = "one_shot";
  int iterations = 30;
  recover_cmd->add_option("--generator", generator_path)->required();
  recover_cmd->add_option("--estimator", estimator_name);
  recover_cmd->add_option("--model", model_name);
  recover_cmd->add_option("--sigma", sigma);
  recover_cmd->add_option("--m", m);
  recover_cmd->add_option("--iterations", iterations, "bipg / pgd iterations");
  recover_cmd->add_option("--seed", seed);
  pflags.add(recover_cmd);

  auto* sweep_cmd = app.add_subcommand("sweep", "run a sweep from a config file");
  std::string config_path, plots_dir;
  sweep_cmd->add_option("--config", config_path)->required();
  sweep_cmd->add_option("--output", output_path, "override the config's output path");
  sweep_cmd->add_option("--plots", plots_dir, "directory for cosine-vs-m plot data");
  sweep_cmd->add_option("--seed", seed, "override the config's base_seed");

  auto* rate_cmd = app.add_subcommand("rate", "error-vs-m study from a config file");
  rate_cmd->add_option("--config", config_path)->required();
  rate_cmd->add_option("--output", output_path, "CSV of the per-m table");
  rate_cmd->add_option("--seed", seed, "override the config's base_seed");

  auto* diagnose = app.add_subcommand("diagnose", "empirical concentration checks");
  std::string op;
  std::size_t trials = 1000;
  double t_radius = 1.0, epsilon = 2.0;
  std::vector<double> nus = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  Index latent_k = 5;
  diagnose->add_option("--op", op, "event, mu-hat, orthogonal or noise-curve")->required();
  diagnose->add_option("--model", model_name);
  diagnose->add_option("--sigma", sigma);
  diagnose->add_option("--m", m);
  diagnose->add_option("--n", n);
  diagnose->add_option("--k", latent_k, "latent dimension of the default linear generator (noise-curve)");
  diagnose->add_option("--generator", generator_path, "generator for noise-curve");
  diagnose->add_option("--trials", trials);
  diagnose->add_option("--t", t_radius);
  diagnose->add_option("--epsilon", epsilon);
  diagnose->add_option("--nu", nus, "corruption budgets for noise-curve");
  diagnose->add_option("--output", output_path, "CSV output");
  diagnose->add_option("--seed", seed);
  pflags.add(diagnose);

  std::vector<std::string> args;
  for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
  try {
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return 1;
  }

  try {
    const bool seed_given = app.get_subcommands().front()->count("--seed") > 0;

    if (params->parsed()) {
      const ObservationModel model(parse_model_kind(model_name), sigma);
      SimParameterOptions options;
      options.samples = samples;
      options.seed = seed_given ? seed : options.seed;
      options.ambient_dim = param_n;
      const SimParameters p = sim_parameters(model, parse_parameter_method(method_name), options);
      out << "model: " << model.describe() << "\n";
      out << "method: " << to_string(p.method) << "\n";
      out << "mu: " << fmt(p.mu) << "\n";
      out << "xi_sq: " << fmt(p.xi_sq) << "\n";
      out << "rho_sq: " << fmt(p.rho_sq) << "\n";
      out << "theta_4: " << fmt(p.theta_4) << "\n";
      if (p.std_errors) {
        const auto& se = *p.std_errors;
        out << "std_errors: " << fmt(se[0]) << " " << fmt(se[1]) << " " << fmt(se[2]) << " " << fmt(se[3]) << "\n";
      }
      return 0;
    }

    if (simulate->parsed()) {
      const ObservationModel model(parse_model_kind(model_name), sigma);
      VectorXd x;
      if (!generator_path.empty()) {
        const Generator gen = load_generator(generator_path);
        x = plant_ground_truth(gen, reference_parameters(model, {.ambient_dim = gen.ambient_dim()}).mu,
                               derive_seed(seed, {0x67})).x;
      } else {
        if (n < 1) throw ValidationError("--n must be >= 1");
        x = random_unit(n, seed);
      }
      const MeasurementEnsemble e = sample_ensemble(x, m, model, seed);
      json a = json::array();
      for (Index i = 0; i < e.a.rows(); ++i) a.push_back(vector_json(e.a.row(i).transpose()));
      const json j = {{"model", model.describe()}, {"seed", e.seed}, {"x", vector_json(e.x)}, {"a", a},
                      {"y", vector_json(e.y)}};
      write_text(j.dump() + "\n", output_path, out);
      return 0;
    }

    if (project_cmd->parsed()) {
      const Generator gen = load_generator(generator_path);
      const VectorXd s = read_vector_file(input_path);
      const ProjectionResult r = project(gen, s, pflags.build(seed));
      json j = {{"w", vector_json(r.w)}, {"z", vector_json(r.z)}, {"objective", r.objective},
                {"method", to_string(r.method)}};
      if (r.multiplier) j["multiplier"] = *r.multiplier;
      write_text(j.dump() + "\n", output_path, out);
      return 0;
    }

    if (recover_cmd->parsed()) {
      const Generator gen = load_generator(generator_path);
      const ObservationModel model(parse_model_kind(model_name), sigma);
      const double mu = reference_parameters(model, {.ambient_dim = gen.ambient_dim()}).mu;
      const GroundTruth truth = plant_ground_truth(gen, mu, derive_seed(seed, {0x67}));
      const MeasurementEnsemble e = sample_ensemble(truth.x, m, model, seed);
      EstimatorSpec spec;
      spec.kind = parse_estimator_kind(estimator_name);
      spec.iterations = iterations;
      spec.projection = pflags.build(derive_seed(seed, {0x72}));
      spec.validate();
      const RecoveryResult r = recover(e, &gen, spec, mu);
      const double cosine = r.estimate.norm() > 0.0 ? cosine_similarity(truth.x, r.estimate) : 0.0;
      out << "estimator: " << to_string(spec.kind) << "\n";
      out << "model: " << model.describe() << "\n";
      out << "m: " << m << "\n";
      out << "cosine: " << fmt(cosine) << "\n";
      out << "l2_to_mux: " << fmt(error_to_scaled_target(r.estimate, truth.x, mu)) << "\n";
      out << "projection_calls: " << r.projection_calls << "\n";
      out << "projection_mode: " << r.projection_mode << "\n";
      out << "membership: " << to_string(truth.membership) << "\n";
      out << "runtime_ms: " << fmt(r.runtime_ms) << "\n";
      return 0;
    }

    if (sweep_cmd->parsed()) {
      if (!std::filesystem::exists(config_path)) throw ValidationError("config file '" + config_path + "' not found");
      SweepConfig cfg = load_sweep_config(config_path);
      if (!output_path.empty()) cfg.output = output_path;
      if (seed_given) cfg.base_seed = seed;
      const SweepResult r = run_sweep(cfg);
      if (!plots_dir.empty()) emit_plot_data(r.rows, PlotAxis::m, plots_dir);
      out << "rows: " << r.rows.size() << "\n";
      if (!cfg.output.empty()) out << "output: " << cfg.output.string() << "\n";
      return 0;
    }

    if (rate_cmd->parsed()) {
      if (!std::filesystem::exists(config_path)) throw ValidationError("config file '" + config_path + "' not found");
      SweepConfig cfg = load_sweep_config(config_path);
      if (seed_given) cfg.base_seed = seed;
      const RateStudy study = run_rate_study(cfg);
      std::string table = "m,mean_error,std_error,theory\n";
      for (const auto& row : study.rows)
        table += std::to_string(row.m) + "," + fmt(row.mean_error) + "," + fmt(row.std_error) + "," + fmt(row.theory) + "\n";
      out << table;
      out << "slope: " << fmt(study.fit.slope) << " +- " << fmt(study.fit.slope_std_error) << "\n";
      out << "r_squared: " << fmt(study.fit.r_squared) << "\n";
      if (!output_path.empty()) write_text(table, output_path, out);
      return 0;
    }

    if (diagnose->parsed()) {
      const ObservationModel model(parse_model_kind(model_name), sigma);
      std::string csv;
      if (op == "event" || op == "mu-hat" || op == "orthogonal") {
        if (n < 1) throw ValidationError("--n must be >= 1");
        const VectorXd x = random_unit(n, seed);
        if (op == "orthogonal") {
          const VectorXd s = Rng(derive_seed(seed, {0x73})).normal_vector(n);
          const OrthogonalTailResult r = orthogonal_tail(model, x, s, m, epsilon, trials, seed);
          csv = "op,model,m,trials,conditioned_trials,threshold,tail_frequency,gaussian_prediction,gaussian_bound,"
                "bound_std_error,passes\n";
          csv += op + "," + model.describe() + "," + std::to_string(m) + "," + std::to_string(trials) + "," +
                 std::to_string(r.conditioned_trials) + "," + fmt(r.threshold) + "," + fmt(r.tail_frequency) + "," +
                 fmt(r.gaussian_prediction) + "," + fmt(r.gaussian_bound) + "," + fmt(r.bound_std_error) + "," +
                 (r.passes ? "true" : "false") + "\n";
        } else {
          const FrequencyCheck r = op == "event" ? event_E_frequency(model, x, m, trials, seed)
                                                 : mu_hat_concentration(model, x, m, t_radius, trials, seed);
          csv = "op,model,m,trials,frequency,bound,std_error,passes\n";
          csv += op + "," + model.describe() + "," + std::to_string(m) + "," + std::to_string(trials) + "," +
                 fmt(r.frequency) + "," + fmt(r.bound) + "," + fmt(r.std_error) + "," + (r.passes ? "true" : "false") +
                 "\n";
        }
      } else if (op == "noise-curve") {
        std::shared_ptr<Generator> gen;
        const double mu = reference_parameters(model, {.ambient_dim = n}).mu;
        if (!generator_path.empty()) {
          gen = std::make_shared<Generator>(load_generator(generator_path));
        } else {
          if (latent_k < 1 || n < latent_k) throw ValidationError("--k must satisfy 1 <= k <= n");
          gen = std::make_shared<Generator>(LinearGenerator(random_orthonormal_columns(n, latent_k, derive_seed(seed, {0x62})),
                                                            2.0 * std::max(1.0, std::abs(mu))));
        }
        const GroundTruth truth = plant_ground_truth(*gen, mu, derive_seed(seed, {0x67}));
        ProjectionConfig proj = pflags.build(derive_seed(seed, {0x72}));
        if (gen->is_linear() && app.get_subcommands().front()->count("--projection") == 0)
          proj.method = ProjectionMethod::exact_linear;
        const NoiseCurve c = corollary_noise_curve(model, *gen, truth.x, m, nus, trials, seed, proj);
        csv = "nu,mean_error,std_error\n";
        for (const auto& row : c.rows) csv += fmt(row.nu) + "," + fmt(row.mean_error) + "," + fmt(row.std_error) + "\n";
        err << "curvature " << fmt(c.curvature) << " (critical " << fmt(c.curvature_critical) << "), inversions "
            << c.inversions << ", " << (c.passes ? "passes" : "fails") << "\n";
      } else {
        throw ValidationError("--op: unknown diagnostic '" + op + "'");
      }
      write_text(csv, output_path, out);
      return 0;
    }
  } catch (const NumericalError& e) {
    err << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "numerical error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace oneshot
