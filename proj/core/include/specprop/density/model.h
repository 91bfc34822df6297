#pragma once

#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "specprop/ad/parameter_store.h"
#include "specprop/ad/tape.h"
#include "specprop/linalg/matrix.h"
#include "specprop/linalg/rng.h"

namespace specprop::density {

using ad::Var;
using linalg::Matrix;
using linalg::Vector;

// Z -> X models are generators (sampled through, reverse KL); X -> Z models
// map data into the prior (likelihood evaluated directly, forward KL).
enum class Direction { kLatentToData, kDataToLatent };

std::string_view direction_name(Direction d);
// Accepts "z-to-x" / "x-to-z" and the names produced by direction_name.
Direction parse_direction(std::string_view s);

// A differentiable map f acting column-wise on blocks of points.
class Model {
 public:
  virtual ~Model() = default;

  virtual std::string kind() const = 0;
  virtual std::size_t input_dim() const = 0;
  virtual std::size_t output_dim() const = 0;
  // f applied to every column of x (input_dim x B). `params` are bound in
  // store order.
  virtual Var forward(std::span<const Var> params, Var x) const = 0;
  // Numeric settings that, together with the parameters, rebuild the model.
  virtual std::map<std::string, double> hyperparameters() const = 0;
  virtual std::unique_ptr<Model> clone() const = 0;

  ad::ParameterStore& parameters() { return params_; }
  const ad::ParameterStore& parameters() const { return params_; }

  Direction direction() const { return direction_; }
  void set_direction(Direction d) { direction_ = d; }

  // Frozen tensors are bound as constants and receive zero gradient.
  void freeze(std::string_view name);
  void unfreeze_all() { frozen_.clear(); }
  bool is_frozen(std::size_t index) const;

  // Places the parameters on `tape`.
  std::vector<Var> bind(ad::Tape& tape) const;
  // Flattened gradient of a 1x1 node w.r.t. the bound parameters; zero for
  // frozen tensors.
  Vector gradient(Var output, std::span<const Var> params) const;

  // f on plain values, one point per column.
  Matrix evaluate(const Matrix& x) const;
  Vector evaluate(const Vector& x) const;

 protected:
  explicit Model(Direction d) : direction_(d) {}

  ad::ParameterStore params_;
  Direction direction_;
  std::set<std::string, std::less<>> frozen_;
};

// Residual bottleneck network: every block is
//   x + W3 lrelu(W2 lrelu(W1 x + b1) + b2) + b3
// with W1: hidden x dim, W2: hidden x hidden, W3: dim x hidden.
class ResidualFlow final : public Model {
 public:
  struct Shape {
    std::size_t dim = 2;
    std::size_t hidden = 32;
    std::size_t blocks = 4;
    double slope = 0.01;
  };

  // Parameters start at zero, so f is the identity until initialized.
  ResidualFlow(Shape shape, Direction d);
  // He-normal hidden layers; the output layer of each block is scaled by
  // `output_gain`, biases start at zero.
  void initialize(linalg::Rng& rng, double output_gain = 0.1);

  std::string kind() const override { return "residual-flow"; }
  std::size_t input_dim() const override { return shape_.dim; }
  std::size_t output_dim() const override { return shape_.dim; }
  Var forward(std::span<const Var> params, Var x) const override;
  std::map<std::string, double> hyperparameters() const override;
  std::unique_ptr<Model> clone() const override { return std::make_unique<ResidualFlow>(*this); }

  const Shape& shape() const { return shape_; }

  static std::string weight_name(std::size_t block, int layer);
  static std::string bias_name(std::size_t block, int layer);

 private:
  Shape shape_;
};

// f(x) = W x (+ b).
class LinearModel final : public Model {
 public:
  LinearModel(Matrix weight, Direction d, bool with_bias = false);

  std::string kind() const override { return "linear"; }
  std::size_t input_dim() const override { return params_.value(0).cols(); }
  std::size_t output_dim() const override { return params_.value(0).rows(); }
  Var forward(std::span<const Var> params, Var x) const override;
  std::map<std::string, double> hyperparameters() const override;
  std::unique_ptr<Model> clone() const override { return std::make_unique<LinearModel>(*this); }

  bool has_bias() const { return params_.size() > 1; }
};

// f(x) = c x with the scalar c as the only parameter.
class ScaledIdentity final : public Model {
 public:
  ScaledIdentity(std::size_t dim, double c, Direction d);

  std::string kind() const override { return "scaled-identity"; }
  std::size_t input_dim() const override { return dim_; }
  std::size_t output_dim() const override { return dim_; }
  Var forward(std::span<const Var> params, Var x) const override;
  std::map<std::string, double> hyperparameters() const override;
  std::unique_ptr<Model> clone() const override { return std::make_unique<ScaledIdentity>(*this); }

 private:
  std::size_t dim_;
};

// Rebuilds a model skeleton (zero or placeholder parameters) from its kind
// and hyperparameters. Throws std::invalid_argument for unknown kinds.
std::unique_ptr<Model> make_model(std::string_view kind, const std::map<std::string, double>& hyper,
                                  Direction d);

}  // namespace specprop::density
