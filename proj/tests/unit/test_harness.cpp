#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oneshot/errors.hpp"
#include "oneshot/harness.hpp"
#include "test_support.hpp"

using namespace oneshot;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct CliRun {
  int code = 0;
  std::string out;
  std::string err;
};

CliRun run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "oneshot");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Drops the runtime_ms column (10th) of every CSV line.
std::string without_runtime(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    cells.erase(cells.begin() + 9);
    for (const auto& c : cells) out += c + ',';
    out += '\n';
  }
  return out;
}

SweepConfig small_config(std::uint64_t seed = 7) {
  SweepConfig cfg;
  cfg.generator = std::make_shared<const Generator>(
      make_random_mlp({3, 12, 20}, {Activation::tanh, Activation::none}, 1.5, 1.2, 1));
  cfg.model_kind = ModelKind::noisy_one_bit;
  cfg.sigmas = {0.5};
  cfg.ms = {20, 40, 80};
  cfg.trials = 2;
  EstimatorSpec a;
  a.projection.restarts = 2;
  a.projection.steps = 20;
  EstimatorSpec b = a;
  b.kind = EstimatorKind::bipg;
  b.iterations = 3;
  cfg.estimators = {a, b};
  cfg.base_seed = seed;
  cfg.threads = 1;
  return cfg;
}

const char* kConfig = R"({
  "generator": "gen.json", "model": "noisy_one_bit", "sigmas": [0.5], "ms": [20, 40, 80], "trials": 2,
  "base_seed": 7, "output": "out.csv",
  "estimators": [ {"kind": "one_shot", "projection": {"method": "exact_linear"}},
                  {"kind": "bipg", "iterations": 3, "step_size": null, "projection": {"method": "exact_linear"}} ]
})";

}  // namespace

TEST_CASE("config parsing") {
  const SweepConfig cfg = parse_sweep_config(kConfig, "/data");
  CHECK(cfg.generator_path == std::filesystem::path("/data/gen.json"));
  CHECK(cfg.output == std::filesystem::path("/data/out.csv"));
  CHECK(cfg.model_kind == ModelKind::noisy_one_bit);
  CHECK(cfg.ms == std::vector<Eigen::Index>{20, 40, 80});
  CHECK(cfg.trials == 2);
  REQUIRE(cfg.estimators.size() == 2);
  CHECK(cfg.estimators[1].kind == EstimatorKind::bipg);
  CHECK(cfg.estimators[1].iterations == 3);
  CHECK_FALSE(cfg.estimators[1].step_size);
  CHECK(cfg.estimators[0].projection.method == ProjectionMethod::exact_linear);
  CHECK(cfg.delta == 0.01);
}

TEST_CASE("config errors name the offending field") {
  auto message = [](const std::string& text) -> std::string {
    try {
      parse_sweep_config(text);
    } catch (const std::exception& e) {
      return e.what();
    }
    return "";
  };
  CHECK(message(R"({"model": "cubic", "sigmas": [1], "ms": [10], "trials": 1, "estimators": [{"kind": "one_shot"}]})")
            .find("generator") != std::string::npos);
  CHECK(message(R"({"generator": "g", "model": "cubic", "sigmas": [1], "ms": [10], "trials": 1,
                    "estimators": [{"kind": "one_shot"}, {"kind": "pgd", "projection": {"steps": "ten"}}]})")
            .find("estimators[1].projection.steps") != std::string::npos);
  CHECK(message(R"({"generator": "g", "model": "cubic", "sigmas": [1], "ms": [10], "trials": 1, "colour": 3,
                    "estimators": [{"kind": "one_shot"}]})")
            .find("colour") != std::string::npos);
  CHECK(message(R"({"generator": "g", "model": "cubic", "sigmas": [], "ms": [10], "trials": 1,
                    "estimators": [{"kind": "one_shot"}]})")
            .find("sigmas") != std::string::npos);
  CHECK(message(R"({"generator": "g", "model": "cubic", "sigmas": [1], "ms": [0], "trials": 1,
                    "estimators": [{"kind": "one_shot"}]})")
            .find("ms[0]") != std::string::npos);
  CHECK(message(R"({"generator": "g", "model": "cubic", "sigmas": [1], "ms": [10], "trials": 1,
                    "estimators": [{"kind": "pgd", "iterations": 0}]})")
            .find("estimators[0]") != std::string::npos);
  CHECK_THROWS_AS(parse_sweep_config("{ not json"), ParseError);
  CHECK_THROWS_AS(load_sweep_config("/nonexistent/config.json"), ValidationError);
}

TEST_CASE("sweep row count and canonical order") {
  const SweepResult r = run_sweep(small_config());
  REQUIRE(r.rows.size() == 12);
  std::size_t i = 0;
  for (Eigen::Index m : {20, 40, 80})
    for (std::size_t t = 0; t < 2; ++t)
      for (const char* est : {"one_shot", "bipg"}) {
        CHECK(r.rows[i].m == m);
        CHECK(r.rows[i].trial == t);
        CHECK(r.rows[i].estimator == est);
        CHECK(r.rows[i].model_kind == "noisy_one_bit");
        CHECK(std::abs(r.rows[i].cosine_best) <= 1.0 + 1e-12);
        ++i;
      }
  CHECK(r.truths.size() == 2);
}

TEST_CASE("sweeps are deterministic and persisted") {
  const auto dir = test::scratch_dir("sweep_det");
  SweepConfig a = small_config();
  a.output = dir / "a.csv";
  SweepConfig b = small_config();
  b.output = dir / "b.csv";
  b.threads = 3;
  run_sweep(a);
  run_sweep(b);
  const std::string ca = read_text(a.output), cb = read_text(b.output);
  CHECK(ca.substr(0, ca.find('\n')) == kResultHeader);
  CHECK(without_runtime(ca) == without_runtime(cb));
  CHECK(std::filesystem::exists(dir / "a.csv.meta.json"));

  const auto rows = read_results(a.output);
  const auto direct = run_sweep(small_config()).rows;
  REQUIRE(rows.size() == direct.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].cosine_best == direct[i].cosine_best);
    CHECK(rows[i].seed == direct[i].seed);
  }

  SweepConfig c = small_config(8);
  CHECK(run_sweep(c).rows[0].cosine_best != direct[0].cosine_best);
}

TEST_CASE("sweep seeds are injective over the grid") {
  std::set<std::uint64_t> seen;
  std::size_t count = 0;
  for (std::size_t s = 0; s < 5; ++s)
    for (std::size_t m = 0; m < 6; ++m)
      for (std::size_t t = 0; t < 40; ++t)
        for (std::size_t e : {std::size_t{0}, std::size_t{1}, std::size_t{2}, kSharedSlot}) {
          seen.insert(sweep_seed(11, s, m, t, e));
          ++count;
        }
  CHECK(seen.size() == count);
  CHECK(sweep_seed(11, 0, 0, 0, 0) != sweep_seed(12, 0, 0, 0, 0));
}

TEST_CASE("ground truth membership") {
  const MatrixXd b = random_orthonormal_columns(20, 3, 2);
  const Generator lin(LinearGenerator(b, 2.0));
  const GroundTruth t = plant_ground_truth(lin, 0.8, 3);
  CHECK(t.x.norm() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(t.z0.norm() <= 1.0);
  REQUIRE(t.membership == Membership::exact);
  REQUIRE(t.witness);
  CHECK(t.witness->norm() <= 2.0);
  CHECK((lin.forward(*t.witness) - 0.8 * t.x).norm() < 1e-12);

  // mu = 3 with a tiny ball: mu x is out of reach.
  const Generator small(LinearGenerator(b, 0.1));
  CHECK(plant_ground_truth(small, 3.0, 3).membership == Membership::approximate);

  const Generator tanh_gen = make_random_mlp({3, 10}, {Activation::tanh}, 1.0, 1.0, 4);
  CHECK(plant_ground_truth(tanh_gen, 1.0, 5).membership == Membership::approximate);
  CHECK(to_string(Membership::exact) == "exact");
}

TEST_CASE("rate study validation and plumbing") {
  SweepConfig cfg = small_config();
  cfg.ms = {100};
  cfg.trials = 50;
  CHECK_THROWS_AS(run_rate_study(cfg), ValidationError);
  cfg.ms = {100, 200, 300, 400};
  CHECK_THROWS_AS(run_rate_study(cfg), ValidationError);
  cfg.ms = {100, 200, 400, 800};
  cfg.trials = 10;
  CHECK_THROWS_AS(run_rate_study(cfg), ValidationError);

  const MatrixXd b = random_orthonormal_columns(30, 2, 9);
  SweepConfig lin = small_config();
  lin.generator = std::make_shared<const Generator>(LinearGenerator(b, 5.0));
  lin.model_kind = ModelKind::noisy_cubic;
  lin.sigmas = {1.0};
  lin.ms = {50, 100, 200, 400};
  lin.trials = 50;
  EstimatorSpec one;
  one.projection.method = ProjectionMethod::exact_linear;
  lin.estimators = {one};
  const RateStudy study = run_rate_study(lin);
  REQUIRE(study.rows.size() == 4);
  CHECK(study.parameters.mu == 3.0);
  for (std::size_t i = 1; i < 4; ++i) {
    CHECK(study.rows[i].theory == doctest::Approx(study.rows[0].theory / std::sqrt(double(1 << i))).epsilon(1e-12));
    CHECK(study.rows[i].std_error > 0.0);
  }
  CHECK(study.fit.slope < 0.0);
}

TEST_CASE("plot tables") {
  auto row = [](const char* est, Eigen::Index m, double cosine) {
    ResultRow r;
    r.estimator = est;
    r.model_kind = "noisy_cubic";
    r.sigma = 1.0;
    r.m = m;
    r.cosine_best = cosine;
    return r;
  };
  const std::vector<ResultRow> rows = {row("one_shot", 10, 0.5), row("csgm", 10, 0.1), row("one_shot", 10, 0.7),
                                       row("csgm", 10, 0.3), row("one_shot", 20, 0.9), row("csgm", 20, 0.2)};
  const auto tables = make_plot_tables(rows, PlotAxis::m);
  REQUIRE(tables.size() == 1);
  const PlotTable& t = tables[0];
  CHECK(t.series == std::vector<std::string>{"one_shot", "csgm"});
  CHECK(t.xs == std::vector<double>{10, 20});
  CHECK(t.values[0][0] == doctest::Approx(0.6));
  CHECK(t.values[0][1] == doctest::Approx(0.2));
  CHECK(t.values[1][0] == 0.9);
  const std::string csv = t.to_csv();
  CHECK(csv.substr(0, csv.find('\n')) == "m,mean_cosine_one_shot,mean_cosine_csgm");

  const auto by_sigma = make_plot_tables(rows, PlotAxis::sigma);
  CHECK(by_sigma.size() == 2);
  CHECK(by_sigma[0].x_label == "sigma");

  const auto dir = test::scratch_dir("plots");
  const auto paths = emit_plot_data(rows, PlotAxis::m, dir);
  REQUIRE(paths.size() == 1);
  CHECK(read_text(paths[0]) == csv);

  CHECK_THROWS_AS(make_plot_tables({}, PlotAxis::m), ValidationError);
  std::vector<ResultRow> ragged = rows;
  ragged.push_back(row("pgd", 20, 0.4));
  CHECK_THROWS_AS(make_plot_tables(ragged, PlotAxis::m), ValidationError);
}

TEST_CASE("cli: params and usage errors") {
  const CliRun p = run_cli({"params", "--model", "one-bit", "--sigma", "0.5", "--method", "analytic"});
  CHECK(p.code == 0);
  CHECK(p.out.find("mu: 0.7136496465") != std::string::npos);

  CHECK(run_cli({"frobnicate"}).code == 1);
  CHECK(run_cli({"params", "--model", "cubic", "--bogus", "1"}).code == 1);
  CHECK(run_cli({"params", "--model", "quartic"}).code == 1);
  CHECK(run_cli({"--help"}).code == 0);

  const CliRun missing = run_cli({"sweep", "--config", "missing.json"});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("missing.json") != std::string::npos);
}

TEST_CASE("cli: subcommands end to end") {
  const auto dir = test::scratch_dir("cli");
  const Generator lin(LinearGenerator(random_orthonormal_columns(20, 3, 1), 4.0));
  save_generator(lin, dir / "gen.json");

  const CliRun sim = run_cli({"simulate", "--model", "cubic", "--m", "5", "--generator", (dir / "gen.json").string(),
                              "--seed", "3"});
  CHECK(sim.code == 0);
  CHECK(sim.out.find("\"y\"") != std::string::npos);

  std::string vec = "[";
  for (int i = 0; i < 20; ++i) vec += (i ? ", " : "") + std::to_string(0.1 * i);
  write_text(dir / "s.json", vec + "]");
  const CliRun proj = run_cli({"project", "--generator", (dir / "gen.json").string(), "--input",
                               (dir / "s.json").string(), "--projection", "exact_linear"});
  CHECK(proj.code == 0);

  const CliRun rec = run_cli({"recover", "--generator", (dir / "gen.json").string(), "--estimator", "pgd", "--model",
                              "cubic", "--sigma", "1", "--m", "60", "--projection", "exact_linear", "--seed", "4"});
  CHECK(rec.code == 0);

  const CliRun diag = run_cli({"diagnose", "--op", "event", "--model", "cubic", "--m", "50", "--n", "10", "--trials",
                               "40", "--seed", "5"});
  CHECK(diag.code == 0);

  write_text(dir / "sweep.json", kConfig);
  const CliRun sweep = run_cli({"sweep", "--config", (dir / "sweep.json").string(), "--plots", (dir / "plots").string()});
  CHECK(sweep.code == 0);
  CHECK(read_results(dir / "out.csv").size() == 12);
  CHECK(std::filesystem::exists(dir / "plots"));

  write_text(dir / "rate.json", R"({"generator": "gen.json", "model": "cubic", "sigmas": [1], "ms": [40, 80, 160, 320],
    "trials": 50, "estimators": [{"kind": "one_shot", "projection": {"method": "exact_linear"}}]})");
  const CliRun rate = run_cli({"rate", "--config", (dir / "rate.json").string(), "--output", (dir / "rate.csv").string()});
  CHECK(rate.code == 0);
  CHECK(std::filesystem::exists(dir / "rate.csv"));
}

TEST_CASE("cli: numerical failures exit with code 2") {
  // Weights this large overflow the forward pass, so every restart diverges.
  const auto dir = test::scratch_dir("cli_numeric");
  MatrixXd w1 = MatrixXd::Constant(4, 2, 1e200), w2 = MatrixXd::Constant(6, 4, 1e200);
  const Generator huge(MlpGenerator({{w1, VectorXd::Zero(4), Activation::none}, {w2, VectorXd::Zero(6), Activation::none}},
                                    1.0));
  save_generator(huge, dir / "huge.json");
  const CliRun r = run_cli({"recover", "--generator", (dir / "huge.json").string(), "--model", "cubic", "--m", "20",
                            "--restarts", "2", "--steps", "5"});
  CHECK(r.code == 2);
}
