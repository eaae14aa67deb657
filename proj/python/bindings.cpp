#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>
#include <string>
#include <vector>

#include "oneshot/diagnostics.hpp"
#include "oneshot/errors.hpp"
#include "oneshot/estimators.hpp"
#include "oneshot/generators.hpp"
#include "oneshot/harness.hpp"
#include "oneshot/metrics.hpp"
#include "oneshot/observation.hpp"
#include "oneshot/projection.hpp"

namespace py = pybind11;
using namespace oneshot;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

py::dict row_to_dict(const ResultRow& r) {
  py::dict d;
  d["estimator"] = r.estimator;
  d["model_kind"] = r.model_kind;
  d["sigma"] = r.sigma;
  d["m"] = r.m;
  d["trial"] = r.trial;
  d["seed"] = r.seed;
  d["cosine_best"] = r.cosine_best;
  d["cosine_mean"] = r.cosine_mean;
  d["l2_to_mux"] = r.l2_to_mux;
  d["runtime_ms"] = r.runtime_ms;
  d["projection_mode"] = r.projection_mode;
  d["membership"] = std::string(to_string(r.membership));
  return d;
}

// Runs the CLI with captured streams; returns (exit code, stdout, stderr).
py::tuple run_cli(const std::vector<std::string>& args) {
  std::vector<std::string> full = {"oneshot"};
  full.insert(full.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : full) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code;
  {
    py::gil_scoped_release release;
    code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_oneshot, m) {
  m.doc() = "Single-index recovery with generative priors: OneShot and baselines.";

  auto validation = py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<ParseError>(m, "ParseError", validation.ptr());
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  py::enum_<DomainMode>(m, "DomainMode").value("strict", DomainMode::strict).value("unchecked", DomainMode::unchecked);
  py::enum_<Activation>(m, "Activation")
      .value("relu", Activation::relu)
      .value("sigmoid", Activation::sigmoid)
      .value("tanh", Activation::tanh)
      .value("none", Activation::none);
  py::enum_<ModelKind>(m, "ModelKind")
      .value("noisy_one_bit", ModelKind::noisy_one_bit)
      .value("noisy_cubic", ModelKind::noisy_cubic)
      .value("identity", ModelKind::identity)
      .value("one_bit_signal_noise", ModelKind::one_bit_signal_noise)
      .value("cubic_signal_noise", ModelKind::cubic_signal_noise);
  py::enum_<ParameterMethod>(m, "ParameterMethod")
      .value("analytic", ParameterMethod::analytic)
      .value("quadrature", ParameterMethod::quadrature)
      .value("monte_carlo", ParameterMethod::monte_carlo);
  py::enum_<ProjectionMethod>(m, "ProjectionMethod")
      .value("exact_linear", ProjectionMethod::exact_linear)
      .value("latent_adam", ProjectionMethod::latent_adam);
  py::enum_<EstimatorKind>(m, "EstimatorKind")
      .value("one_shot", EstimatorKind::one_shot)
      .value("bipg", EstimatorKind::bipg)
      .value("pgd", EstimatorKind::pgd)
      .value("csgm", EstimatorKind::csgm)
      .value("lasso_ista", EstimatorKind::lasso_ista);

  // generators
  py::class_<Generator>(m, "Generator")
      .def_static(
          "linear", [](const MatrixXd& b, double radius) { return Generator(LinearGenerator(b, radius)); },
          py::arg("matrix"), py::arg("radius"))
      .def_static(
          "mlp",
          [](const std::vector<MatrixXd>& weights, const std::vector<VectorXd>& biases,
             const std::vector<Activation>& activations, double radius) {
            if (weights.size() != biases.size() || weights.size() != activations.size())
              throw ValidationError("mlp: weights, biases and activations need equal lengths");
            std::vector<DenseLayer> layers;
            for (std::size_t i = 0; i < weights.size(); ++i) layers.push_back({weights[i], biases[i], activations[i]});
            return Generator(MlpGenerator(std::move(layers), radius));
          },
          py::arg("weights"), py::arg("biases"), py::arg("activations"), py::arg("radius"))
      .def_static("random_mlp", &make_random_mlp, py::arg("widths"), py::arg("activations"), py::arg("radius"),
                  py::arg("layer_norm"), py::arg("seed"))
      .def_static("synthetic_fixture", &make_synthetic_fixture, py::arg("seed"))
      .def_static("load", &load_generator, py::arg("path"))
      .def_static("from_text", &generator_from_text, py::arg("text"))
      .def("save", [](const Generator& g, const std::filesystem::path& p) { save_generator(g, p); }, py::arg("path"))
      .def("to_text", &generator_to_text)
      .def("forward", &Generator::forward, py::arg("z"), py::arg("mode") = DomainMode::strict)
      .def("jacobian_vector_product", &Generator::jacobian_vector_product, py::arg("z"), py::arg("u"),
           py::arg("mode") = DomainMode::strict)
      .def("lipschitz_bound", &Generator::lipschitz_bound)
      .def_property_readonly("latent_dim", &Generator::latent_dim)
      .def_property_readonly("ambient_dim", &Generator::ambient_dim)
      .def_property_readonly("radius", &Generator::radius)
      .def_property_readonly("is_linear", &Generator::is_linear);
  m.def("random_orthonormal_columns", &random_orthonormal_columns, py::arg("n"), py::arg("k"), py::arg("seed"));

  // observation
  py::class_<ObservationModel>(m, "ObservationModel")
      .def(py::init<ModelKind, double>(), py::arg("kind"), py::arg("sigma") = 0.0)
      .def_property_readonly("kind", &ObservationModel::kind)
      .def_property_readonly("sigma", &ObservationModel::sigma)
      .def("__repr__", &ObservationModel::describe);
  m.def("parse_model_kind", [](const std::string& s) { return parse_model_kind(s); });

  py::class_<MeasurementEnsemble>(m, "MeasurementEnsemble")
      .def_readonly("x", &MeasurementEnsemble::x)
      .def_readonly("a", &MeasurementEnsemble::a)
      .def_readonly("y", &MeasurementEnsemble::y)
      .def_readonly("seed", &MeasurementEnsemble::seed)
      .def_readonly("corruption_budget", &MeasurementEnsemble::corruption_budget)
      .def_property_readonly("m", &MeasurementEnsemble::m)
      .def_property_readonly("n", &MeasurementEnsemble::n);
  m.def("sample_ensemble", &sample_ensemble, py::arg("x"), py::arg("m"), py::arg("model"), py::arg("seed"));
  m.def("apply_bounded_corruption", &apply_bounded_corruption, py::arg("ensemble"), py::arg("nu"), py::arg("seed"));

  py::class_<SimParameters>(m, "SimParameters")
      .def_readonly("mu", &SimParameters::mu)
      .def_readonly("xi_sq", &SimParameters::xi_sq)
      .def_readonly("rho_sq", &SimParameters::rho_sq)
      .def_readonly("theta_4", &SimParameters::theta_4)
      .def_readonly("method", &SimParameters::method)
      .def_readonly("std_errors", &SimParameters::std_errors);
  m.def(
      "sim_parameters",
      [](const ObservationModel& model, ParameterMethod method, std::size_t samples, std::uint64_t seed,
         Eigen::Index ambient_dim) {
        SimParameterOptions opt;
        opt.samples = samples;
        opt.seed = seed;
        opt.ambient_dim = ambient_dim;
        return sim_parameters(model, method, opt);
      },
      py::arg("model"), py::arg("method") = ParameterMethod::analytic, py::arg("samples") = 1'000'000,
      py::arg("seed") = 0x5eed, py::arg("ambient_dim") = 0);

  // projection
  py::class_<ProjectionConfig>(m, "ProjectionConfig")
      .def(py::init<>())
      .def_readwrite("method", &ProjectionConfig::method)
      .def_readwrite("steps", &ProjectionConfig::steps)
      .def_readwrite("learning_rate", &ProjectionConfig::learning_rate)
      .def_readwrite("restarts", &ProjectionConfig::restarts)
      .def_readwrite("restart_seed", &ProjectionConfig::restart_seed)
      .def_readwrite("domain_mode", &ProjectionConfig::domain_mode)
      .def_property(
          "adam", [](const ProjectionConfig& c) { return py::make_tuple(c.adam.beta1, c.adam.beta2, c.adam.epsilon); },
          [](ProjectionConfig& c, std::tuple<double, double, double> t) {
            c.adam = {std::get<0>(t), std::get<1>(t), std::get<2>(t)};
          })
      .def("mode_label", &ProjectionConfig::mode_label);

  py::class_<ProjectionResult>(m, "ProjectionResult")
      .def_readonly("w", &ProjectionResult::w)
      .def_readonly("z", &ProjectionResult::z)
      .def_readonly("objective", &ProjectionResult::objective)
      .def_readonly("per_restart_objectives", &ProjectionResult::per_restart_objectives)
      .def_readonly("best_restart", &ProjectionResult::best_restart)
      .def_readonly("all_diverged", &ProjectionResult::all_diverged)
      .def_readonly("multiplier", &ProjectionResult::multiplier);
  m.def("project", &project, py::arg("generator"), py::arg("s"), py::arg("config") = ProjectionConfig{},
        py::call_guard<py::gil_scoped_release>());

  // estimators
  py::class_<EstimatorSpec>(m, "EstimatorSpec")
      .def(py::init([](EstimatorKind kind, const ProjectionConfig& projection) {
             EstimatorSpec s;
             s.kind = kind;
             s.projection = projection;
             return s;
           }),
           py::arg("kind") = EstimatorKind::one_shot, py::arg("projection") = ProjectionConfig{})
      .def_readwrite("kind", &EstimatorSpec::kind)
      .def_readwrite("projection", &EstimatorSpec::projection)
      .def_readwrite("iterations", &EstimatorSpec::iterations)
      .def_readwrite("step_size", &EstimatorSpec::step_size)
      .def_readwrite("shrinkage", &EstimatorSpec::shrinkage)
      .def_readwrite("ista_iters", &EstimatorSpec::ista_iters);

  py::class_<RecoveryResult>(m, "RecoveryResult")
      .def_readonly("estimate", &RecoveryResult::estimate)
      .def_readonly("latent", &RecoveryResult::latent)
      .def_readonly("iterate_history", &RecoveryResult::iterate_history)
      .def_readonly("runtime_ms", &RecoveryResult::runtime_ms)
      .def_readonly("seed", &RecoveryResult::seed)
      .def_readonly("projection_calls", &RecoveryResult::projection_calls)
      .def_readonly("projection_mode", &RecoveryResult::projection_mode);
  m.def("one_shot", &one_shot, py::arg("ensemble"), py::arg("generator"), py::arg("config") = ProjectionConfig{},
        py::call_guard<py::gil_scoped_release>());
  m.def(
      "recover",
      [](const MeasurementEnsemble& e, const Generator* gen, const EstimatorSpec& spec, std::optional<double> mu) {
        py::gil_scoped_release release;
        return recover(e, gen, spec, mu);
      },
      py::arg("ensemble"), py::arg("generator"), py::arg("spec"), py::arg("mu") = py::none());

  // metrics
  m.def("cosine_similarity", &cosine_similarity, py::arg("x"), py::arg("v"));
  m.def("error_to_scaled_target", &error_to_scaled_target, py::arg("v"), py::arg("x"), py::arg("mu"));
  py::class_<RateFit>(m, "RateFit")
      .def_readonly("slope", &RateFit::slope)
      .def_readonly("intercept", &RateFit::intercept)
      .def_readonly("r_squared", &RateFit::r_squared)
      .def_readonly("slope_std_error", &RateFit::slope_std_error);
  m.def(
      "fit_rate_slope",
      [](const std::vector<double>& ms, const std::vector<double>& errors) {
        if (ms.size() != errors.size()) throw ValidationError("fit_rate_slope: ms and errors differ in length");
        std::vector<RatePoint> pts;
        for (std::size_t i = 0; i < ms.size(); ++i) pts.push_back({ms[i], errors[i]});
        return fit_rate_slope(pts);
      },
      py::arg("ms"), py::arg("errors"));

  // diagnostics
  py::class_<FrequencyCheck>(m, "FrequencyCheck")
      .def_readonly("frequency", &FrequencyCheck::frequency)
      .def_readonly("bound", &FrequencyCheck::bound)
      .def_readonly("std_error", &FrequencyCheck::std_error)
      .def_readonly("trials", &FrequencyCheck::trials)
      .def_readonly("passes", &FrequencyCheck::passes);
  m.def("event_E_frequency", &event_E_frequency, py::arg("model"), py::arg("x"), py::arg("m"), py::arg("trials"),
        py::arg("seed"), py::call_guard<py::gil_scoped_release>());
  m.def("mu_hat_concentration", &mu_hat_concentration, py::arg("model"), py::arg("x"), py::arg("m"), py::arg("t"),
        py::arg("trials"), py::arg("seed"), py::call_guard<py::gil_scoped_release>());
  m.def("predicted_rate_bound", &predicted_rate_bound, py::arg("xi"), py::arg("k"), py::arg("lipschitz"),
        py::arg("radius"), py::arg("delta"), py::arg("m"));

  // harness
  m.def(
      "run_sweep",
      [](const std::filesystem::path& config, std::optional<std::filesystem::path> output) {
        SweepConfig cfg = load_sweep_config(config);
        if (output) cfg.output = *output;
        SweepResult r;
        {
          py::gil_scoped_release release;
          r = run_sweep(std::move(cfg));
        }
        py::list rows;
        for (const auto& row : r.rows) rows.append(row_to_dict(row));
        return rows;
      },
      py::arg("config"), py::arg("output") = py::none(),
      "Runs a sweep from a config file and returns its rows as dicts.");
  m.def("sweep_seed", &sweep_seed, py::arg("base"), py::arg("sigma_index"), py::arg("m_index"), py::arg("trial"),
        py::arg("estimator"));
  m.def("cli", &run_cli, py::arg("args"), "Runs the command-line tool; returns (exit_code, stdout, stderr).");
}
