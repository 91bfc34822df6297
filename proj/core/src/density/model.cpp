#include "specprop/density/model.h"

#include <cmath>
#include <stdexcept>

#include "specprop/ad/derivatives.h"

namespace specprop::density {

std::string_view direction_name(Direction d) {
  return d == Direction::kLatentToData ? "z-to-x" : "x-to-z";
}

Direction parse_direction(std::string_view s) {
  if (s == "z-to-x" || s == "latent-to-data") return Direction::kLatentToData;
  if (s == "x-to-z" || s == "data-to-latent") return Direction::kDataToLatent;
  throw std::invalid_argument("unknown model direction '" + std::string(s) + "'");
}

void Model::freeze(std::string_view name) {
  if (!params_.contains(name)) {
    throw std::out_of_range("Model::freeze: no parameter named '" + std::string(name) + "'");
  }
  frozen_.emplace(name);
}

bool Model::is_frozen(std::size_t index) const {
  return frozen_.find(params_.name(index)) != frozen_.end();
}

std::vector<Var> Model::bind(ad::Tape& tape) const {
  std::vector<Var> vars;
  vars.reserve(params_.size());
  for (std::size_t i = 0; i < params_.size(); ++i) {
    vars.push_back(is_frozen(i) ? tape.constant(params_.value(i)) : tape.variable(params_.value(i)));
  }
  return vars;
}

Vector Model::gradient(Var output, std::span<const Var> params) const {
  std::vector<Var> live;
  for (std::size_t i = 0; i < params.size(); ++i)
    if (!is_frozen(i)) live.push_back(params[i]);
  std::vector<Var> grads;
  if (!live.empty()) grads = ad::gradients(output, live);
  std::vector<double> flat;
  flat.reserve(params_.total_count());
  std::size_t k = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix& shape = params_.value(i);
    if (is_frozen(i)) {
      flat.insert(flat.end(), shape.rows() * shape.cols(), 0.0);
    } else {
      const auto values = grads[k++].value().span();
      flat.insert(flat.end(), values.begin(), values.end());
    }
  }
  return Vector(std::move(flat));
}

Matrix Model::evaluate(const Matrix& x) const {
  ad::Tape tape;
  std::vector<Var> params;
  for (std::size_t i = 0; i < params_.size(); ++i) params.push_back(tape.constant(params_.value(i)));
  return forward(params, tape.constant(x)).value();
}

Vector Model::evaluate(const Vector& x) const {
  return evaluate(Matrix::column(x)).col(0);
}

// ResidualFlow

ResidualFlow::ResidualFlow(Shape shape, Direction d) : Model(d), shape_(shape) {
  if (shape.dim == 0 || shape.hidden == 0 || shape.blocks == 0) {
    throw std::invalid_argument("ResidualFlow: dim, hidden and blocks must be positive");
  }
  const std::size_t in[3] = {shape.dim, shape.hidden, shape.hidden};
  const std::size_t out[3] = {shape.hidden, shape.hidden, shape.dim};
  for (std::size_t b = 0; b < shape.blocks; ++b) {
    for (int l = 0; l < 3; ++l) {
      params_.add(weight_name(b, l), Matrix(out[l], in[l], 0.0));
      params_.add(bias_name(b, l), Matrix(out[l], 1, 0.0));
    }
  }
}

std::string ResidualFlow::weight_name(std::size_t block, int layer) {
  return "block" + std::to_string(block) + ".layer" + std::to_string(layer) + ".weight";
}

std::string ResidualFlow::bias_name(std::size_t block, int layer) {
  return "block" + std::to_string(block) + ".layer" + std::to_string(layer) + ".bias";
}

void ResidualFlow::initialize(linalg::Rng& rng, double output_gain) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Matrix& m = params_.value(i);
    if (m.cols() == 1 && params_.name(i).ends_with(".bias")) {
      m = Matrix(m.rows(), 1, 0.0);
      continue;
    }
    const bool output_layer = params_.name(i).find(".layer2.") != std::string::npos;
    const double sd = (output_layer ? output_gain : 1.0) * std::sqrt(2.0 / static_cast<double>(m.cols()));
    for (double& v : m.span()) v = sd * rng.normal();
  }
}

Var ResidualFlow::forward(std::span<const Var> params, Var x) const {
  if (params.size() != params_.size()) throw std::invalid_argument("ResidualFlow: wrong parameter count");
  if (x.rows() != shape_.dim) {
    throw linalg::DimensionError("ResidualFlow: input has " + std::to_string(x.rows()) + " rows, expected " +
                                 std::to_string(shape_.dim));
  }
  for (std::size_t b = 0; b < shape_.blocks; ++b) {
    const Var* p = params.data() + 6 * b;
    Var h = ad::leaky_relu(ad::bias_add(ad::matmul(p[0], x), p[1]), shape_.slope);
    h = ad::leaky_relu(ad::bias_add(ad::matmul(p[2], h), p[3]), shape_.slope);
    x = ad::add(x, ad::bias_add(ad::matmul(p[4], h), p[5]));
  }
  return x;
}

std::map<std::string, double> ResidualFlow::hyperparameters() const {
  return {{"dim", static_cast<double>(shape_.dim)},
          {"hidden", static_cast<double>(shape_.hidden)},
          {"blocks", static_cast<double>(shape_.blocks)},
          {"slope", shape_.slope}};
}

// LinearModel

LinearModel::LinearModel(Matrix weight, Direction d, bool with_bias) : Model(d) {
  const std::size_t rows = weight.rows();
  if (weight.rows() == 0 || weight.cols() == 0) throw std::invalid_argument("LinearModel: empty weight");
  params_.add("weight", std::move(weight));
  if (with_bias) params_.add("bias", Matrix(rows, 1, 0.0));
}

Var LinearModel::forward(std::span<const Var> params, Var x) const {
  Var y = ad::matmul(params[0], x);
  return has_bias() ? ad::bias_add(y, params[1]) : y;
}

std::map<std::string, double> LinearModel::hyperparameters() const {
  return {{"input_dim", static_cast<double>(input_dim())},
          {"output_dim", static_cast<double>(output_dim())},
          {"bias", has_bias() ? 1.0 : 0.0}};
}

// ScaledIdentity

ScaledIdentity::ScaledIdentity(std::size_t dim, double c, Direction d) : Model(d), dim_(dim) {
  if (dim == 0) throw std::invalid_argument("ScaledIdentity: dim must be positive");
  params_.add("scale", Matrix(1, 1, c));
}

Var ScaledIdentity::forward(std::span<const Var> params, Var x) const {
  return ad::scale_by(x, params[0]);
}

std::map<std::string, double> ScaledIdentity::hyperparameters() const {
  return {{"dim", static_cast<double>(dim_)}};
}

namespace {

std::size_t count_of(const std::map<std::string, double>& hyper, const std::string& key) {
  auto it = hyper.find(key);
  if (it == hyper.end()) throw std::invalid_argument("model hyperparameter '" + key + "' missing");
  if (!(it->second >= 1.0) || it->second != std::floor(it->second)) {
    throw std::invalid_argument("model hyperparameter '" + key + "' must be a positive integer");
  }
  return static_cast<std::size_t>(it->second);
}

}  // namespace

std::unique_ptr<Model> make_model(std::string_view kind, const std::map<std::string, double>& hyper,
                                  Direction d) {
  if (kind == "residual-flow") {
    ResidualFlow::Shape s;
    s.dim = count_of(hyper, "dim");
    s.hidden = count_of(hyper, "hidden");
    s.blocks = count_of(hyper, "blocks");
    auto it = hyper.find("slope");
    if (it != hyper.end()) s.slope = it->second;
    return std::make_unique<ResidualFlow>(s, d);
  }
  if (kind == "linear") {
    const std::size_t in = count_of(hyper, "input_dim");
    const std::size_t out = count_of(hyper, "output_dim");
    auto it = hyper.find("bias");
    const bool bias = it != hyper.end() && it->second != 0.0;
    return std::make_unique<LinearModel>(Matrix(out, in, 0.0), d, bias);
  }
  if (kind == "scaled-identity") {
    return std::make_unique<ScaledIdentity>(count_of(hyper, "dim"), 1.0, d);
  }
  throw std::invalid_argument("unknown model kind '" + std::string(kind) + "'");
}

}  // namespace specprop::density
