#include "oneshot/generators.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <Eigen/QR>
#include <json.hpp>

#include "oneshot/errors.hpp"
#include "oneshot/linalg.hpp"
#include "oneshot/rng.hpp"
#include "text_format.hpp"

namespace oneshot {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string_view to_string(DomainMode mode) {
  return mode == DomainMode::strict ? "strict" : "unchecked";
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
    case Activation::none: return "none";
  }
  return "none";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "tanh") return Activation::tanh;
  if (name == "none" || name == "linear" || name == "identity") return Activation::none;
  throw ValidationError("unsupported activation '" + std::string(name) + "'");
}

double activation_lipschitz(Activation a) { return a == Activation::sigmoid ? 0.25 : 1.0; }

namespace {

double activate(Activation a, double v) {
  switch (a) {
    case Activation::relu: return v > 0.0 ? v : 0.0;
    case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-v));
    case Activation::tanh: return std::tanh(v);
    case Activation::none: return v;
  }
  return v;
}

// Derivative expressed through the pre-activation.
double activate_derivative(Activation a, double pre) {
  switch (a) {
    case Activation::relu: return pre > 0.0 ? 1.0 : 0.0;
    case Activation::sigmoid: {
      const double s = 1.0 / (1.0 + std::exp(-pre));
      return s * (1.0 - s);
    }
    case Activation::tanh: {
      const double t = std::tanh(pre);
      return 1.0 - t * t;
    }
    case Activation::none: return 1.0;
  }
  return 1.0;
}

void check_radius(double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius))
    throw ValidationError("latent radius must be positive and finite");
}

}  // namespace

bool LatentBall::contains(const VectorXd& z) const {
  return z.norm() - radius <= 1e-12 * std::max(1.0, radius);
}

VectorXd LatentBall::clip(const VectorXd& z) const {
  const double norm = z.norm();
  if (norm <= radius) return z;
  return z * (radius / norm);
}

LinearGenerator::LinearGenerator(MatrixXd matrix, double radius)
    : matrix_(std::move(matrix)), domain_{matrix_.cols(), radius} {
  check_radius(radius);
  if (matrix_.cols() < 1) throw ValidationError("linear generator needs k >= 1");
  if (matrix_.rows() < matrix_.cols())
    throw ValidationError("linear generator needs n >= k, got n=" + std::to_string(matrix_.rows()) +
                          " k=" + std::to_string(matrix_.cols()));
  if (!matrix_.allFinite()) throw ValidationError("linear generator matrix has non-finite entries");
}

MlpGenerator::MlpGenerator(std::vector<DenseLayer> layers, double radius)
    : layers_(std::move(layers)) {
  check_radius(radius);
  if (layers_.empty()) throw ValidationError("mlp generator needs at least one layer");
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    const std::string where = "layers[" + std::to_string(l) + "]";
    if (layer.weights.rows() < 1 || layer.weights.cols() < 1)
      throw ValidationError(where + ".weights: empty matrix");
    if (layer.bias.size() != layer.weights.rows())
      throw ValidationError(where + ".bias: length " + std::to_string(layer.bias.size()) +
                            " does not match " + std::to_string(layer.weights.rows()) + " outputs");
    if (l > 0 && layer.weights.cols() != layers_[l - 1].weights.rows())
      throw ValidationError(where + ".weights: dimension chain broken, expects " +
                            std::to_string(layer.weights.cols()) + " inputs but previous layer emits " +
                            std::to_string(layers_[l - 1].weights.rows()));
    if (!layer.weights.allFinite() || !layer.bias.allFinite())
      throw ValidationError(where + ": non-finite parameters");
  }
  domain_ = LatentBall{layers_.front().weights.cols(), radius};
}

Index Generator::ambient_dim() const {
  if (auto* lin = as_linear()) return lin->matrix().rows();
  return as_mlp()->layers().back().weights.rows();
}

const LatentBall& Generator::domain() const {
  return std::visit([](const auto& g) -> const LatentBall& { return g.domain(); }, impl_);
}

void Generator::check_latent(const VectorXd& z, DomainMode mode) const {
  if (z.size() != latent_dim())
    throw ValidationError("latent dimension mismatch: got " + std::to_string(z.size()) + ", expected " +
                          std::to_string(latent_dim()));
  if (mode == DomainMode::strict && !domain().contains(z))
    throw ValidationError("latent vector outside the radius-" + std::to_string(radius()) + " ball (norm " +
                          std::to_string(z.norm()) + ")");
}

VectorXd Generator::forward(const VectorXd& z, DomainMode mode) const {
  check_latent(z, mode);
  if (auto* lin = as_linear()) return lin->matrix() * z;
  VectorXd h = z;
  for (const auto& layer : as_mlp()->layers()) {
    VectorXd pre = layer.weights * h + layer.bias;
    h = pre.unaryExpr([a = layer.activation](double v) { return activate(a, v); });
  }
  return h;
}

VectorXd Generator::jacobian_vector_product(const VectorXd& z, const VectorXd& u, DomainMode mode) const {
  check_latent(z, mode);
  if (u.size() != ambient_dim())
    throw ValidationError("cotangent dimension mismatch: got " + std::to_string(u.size()) + ", expected " +
                          std::to_string(ambient_dim()));
  if (auto* lin = as_linear()) return lin->matrix().transpose() * u;

  const auto& layers = as_mlp()->layers();
  std::vector<VectorXd> pre(layers.size());
  VectorXd h = z;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    pre[l] = layers[l].weights * h + layers[l].bias;
    h = pre[l].unaryExpr([a = layers[l].activation](double v) { return activate(a, v); });
  }
  VectorXd delta = u;
  for (std::size_t l = layers.size(); l-- > 0;) {
    const Activation a = layers[l].activation;
    for (Index i = 0; i < delta.size(); ++i) delta[i] *= activate_derivative(a, pre[l][i]);
    delta = layers[l].weights.transpose() * delta;
  }
  return delta;
}

double Generator::lipschitz_bound() const {
  if (auto* lin = as_linear()) return spectral_norm(lin->matrix()).value;
  double bound = 1.0;
  for (const auto& layer : as_mlp()->layers())
    bound *= spectral_norm(layer.weights).value * activation_lipschitz(layer.activation);
  return bound;
}

std::vector<RangePoint> sample_range(const Generator& gen, std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<RangePoint> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    VectorXd z = gen.domain().clip(rng.uniform_in_ball(gen.latent_dim(), gen.radius()));
    VectorXd w = gen.forward(z);
    out.push_back({std::move(z), std::move(w)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text format

namespace {

void write_matrix(std::ostringstream& os, const MatrixXd& m, const std::string& indent) {
  os << "[\n";
  for (Index i = 0; i < m.rows(); ++i) {
    os << indent << "  [";
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) os << ", ";
      os << detail::format_double(m(i, j));
    }
    os << "]" << (i + 1 < m.rows() ? "," : "") << "\n";
  }
  os << indent << "]";
}

MatrixXd read_matrix(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ParseError(where + ": expected a non-empty array of rows");
  const std::size_t rows = j.size();
  if (!j[0].is_array() || j[0].empty()) throw ParseError(where + "[0]: expected a non-empty array");
  const std::size_t cols = j[0].size();
  MatrixXd m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    const auto& row = j[i];
    const std::string row_where = where + "[" + std::to_string(i) + "]";
    if (!row.is_array()) throw ParseError(row_where + ": expected an array");
    if (row.size() != cols)
      throw ParseError(row_where + ": has " + std::to_string(row.size()) + " entries, expected " +
                       std::to_string(cols));
    for (std::size_t c = 0; c < cols; ++c) {
      if (!row[c].is_number())
        throw ParseError(row_where + "[" + std::to_string(c) + "]: expected a number");
      m(static_cast<Index>(i), static_cast<Index>(c)) = row[c].get<double>();
    }
  }
  return m;
}

VectorXd read_vector(const nlohmann::json& j, const std::string& where) {
  if (!j.is_array()) throw ParseError(where + ": expected an array");
  VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ParseError(where + "[" + std::to_string(i) + "]: expected a number");
    v[static_cast<Index>(i)] = j[i].get<double>();
  }
  return v;
}

}  // namespace

std::string generator_to_text(const Generator& gen) {
  std::ostringstream os;
  os << "{\n";
  if (auto* lin = gen.as_linear()) {
    os << "  \"kind\": \"linear\",\n";
    os << "  \"radius\": " << detail::format_double(gen.radius()) << ",\n";
    os << "  \"matrix\": ";
    write_matrix(os, lin->matrix(), "  ");
    os << "\n";
  } else {
    const auto& layers = gen.as_mlp()->layers();
    os << "  \"kind\": \"mlp\",\n";
    os << "  \"radius\": " << detail::format_double(gen.radius()) << ",\n";
    os << "  \"layers\": [\n";
    for (std::size_t l = 0; l < layers.size(); ++l) {
      os << "    {\n      \"activation\": \"" << to_string(layers[l].activation) << "\",\n";
      os << "      \"bias\": [";
      for (Index i = 0; i < layers[l].bias.size(); ++i) {
        if (i) os << ", ";
        os << detail::format_double(layers[l].bias[i]);
      }
      os << "],\n      \"weights\": ";
      write_matrix(os, layers[l].weights, "      ");
      os << "\n    }" << (l + 1 < layers.size() ? "," : "") << "\n";
    }
    os << "  ]\n";
  }
  os << "}\n";
  return os.str();
}

Generator generator_from_text(std::string_view text) {
  const nlohmann::json doc = detail::parse_json(text);
  if (!doc.is_object()) throw ParseError("generator file: top level must be an object");
  if (!doc.contains("kind") || !doc["kind"].is_string())
    throw ParseError("generator file: missing string field 'kind'");
  if (!doc.contains("radius") || !doc["radius"].is_number())
    throw ParseError("generator file: missing numeric field 'radius'");
  const std::string kind = doc["kind"].get<std::string>();
  const double radius = doc["radius"].get<double>();

  if (kind == "linear") {
    if (!doc.contains("matrix")) throw ParseError("generator file: linear kind requires 'matrix'");
    return LinearGenerator(read_matrix(doc["matrix"], "matrix"), radius);
  }
  if (kind == "mlp") {
    if (!doc.contains("layers") || !doc["layers"].is_array())
      throw ParseError("generator file: mlp kind requires array 'layers'");
    std::vector<DenseLayer> layers;
    for (std::size_t l = 0; l < doc["layers"].size(); ++l) {
      const auto& jl = doc["layers"][l];
      const std::string where = "layers[" + std::to_string(l) + "]";
      if (!jl.is_object()) throw ParseError(where + ": expected an object");
      if (!jl.contains("weights")) throw ParseError(where + ": missing 'weights'");
      if (!jl.contains("bias")) throw ParseError(where + ": missing 'bias'");
      if (!jl.contains("activation") || !jl["activation"].is_string())
        throw ParseError(where + ": missing string 'activation'");
      DenseLayer layer;
      layer.weights = read_matrix(jl["weights"], where + ".weights");
      layer.bias = read_vector(jl["bias"], where + ".bias");
      const std::string act = jl["activation"].get<std::string>();
      try {
        layer.activation = parse_activation(act);
      } catch (const ValidationError&) {
        throw ValidationError(where + ".activation: unsupported activation '" + act + "'");
      }
      layers.push_back(std::move(layer));
    }
    return MlpGenerator(std::move(layers), radius);
  }
  throw ParseError("generator file: unknown kind '" + kind + "' (expected linear or mlp)");
}

void save_generator(const Generator& gen, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open '" + path.string() + "' for writing");
  out << generator_to_text(gen);
  if (!out) throw ValidationError("failed writing '" + path.string() + "'");
}

Generator load_generator(const std::filesystem::path& path) {
  return generator_from_text(detail::read_file(path));
}

Generator make_random_mlp(const std::vector<Index>& widths, const std::vector<Activation>& activations,
                          double radius, double layer_norm, std::uint64_t seed) {
  if (widths.size() < 2 || activations.size() + 1 != widths.size())
    throw ValidationError("make_random_mlp: need widths.size() == activations.size() + 1 >= 2");
  Rng rng(seed);
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    DenseLayer layer;
    layer.weights = rng.normal_matrix(widths[l + 1], widths[l]);
    layer.weights *= layer_norm / spectral_norm(layer.weights).value;
    layer.bias = VectorXd::Zero(widths[l + 1]);
    layer.activation = activations[l];
    layers.push_back(std::move(layer));
  }
  return MlpGenerator(std::move(layers), radius);
}

Generator make_synthetic_fixture(std::uint64_t seed) {
  return make_random_mlp({20, 64, 64, 200}, {Activation::relu, Activation::relu, Activation::none},
                         std::sqrt(20.0), 1.5, seed);
}

MatrixXd random_orthonormal_columns(Index n, Index k, std::uint64_t seed) {
  if (k > n) throw ValidationError("random_orthonormal_columns: need k <= n");
  Rng rng(seed);
  const MatrixXd g = rng.normal_matrix(n, k);
  Eigen::HouseholderQR<MatrixXd> qr(g);
  return qr.householderQ() * MatrixXd::Identity(n, k);
}

}  // namespace oneshot
