#pragma once

#include <map>
#include <span>
#include <utility>
#include <vector>

#include "specprop/density/model.h"
#include "specprop/spectral/linear_operator.h"

namespace specprop::density {

// M_f = J^T J at the columns of `points`, applied matrix-free as
// v -> vjp(f, jvp(f, v)). Batch member b is the metric at column b.
//
// Forward graphs of f on k side-by-side copies of the points are cached, so
// repeated products with k probe columns per point reuse one forward pass.
class MetricOperator final : public spectral::LinearOperator {
 public:
  MetricOperator(const Model& model, std::span<const Var> params, Var points);

  std::size_t dim() const override { return points_.rows(); }
  std::size_t batch() const override { return points_.cols(); }
  Var apply(Var block) const override;
  bool differentiable() const override;
  ad::Tape& tape() const override { return points_.tape(); }

  // f(points).
  Var output() const;

 private:
  const std::pair<Var, Var>& graph(std::size_t copies) const;

  const Model& model_;
  std::vector<Var> params_;
  Var points_;
  mutable std::map<std::size_t, std::pair<Var, Var>> graphs_;
};

// The same operator with every per-point metric assembled from input_dim
// Jacobian columns (one jvp each). Entries M_rc are 1 x batch nodes, so
// products cost elementwise work only. Products agree with MetricOperator
// to rounding and are differentiable in the same way; intended for small
// input dimensions.
class AssembledMetricOperator final : public spectral::LinearOperator {
 public:
  AssembledMetricOperator(const Model& model, std::span<const Var> params, Var points);

  std::size_t dim() const override { return points_.rows(); }
  std::size_t batch() const override { return points_.cols(); }
  Var apply(Var block) const override;
  bool differentiable() const override;
  ad::Tape& tape() const override { return points_.tape(); }

  Var output() const { return output_; }
  // 1 x batch node holding M_rc for every point.
  Var entry(std::size_t r, std::size_t c) const { return entries_[r * dim() + c]; }
  // Column c of every Jacobian: output_dim x batch.
  Var jacobian_column(std::size_t c) const { return jacobian_[c]; }
  // Dense metric of batch member b.
  Matrix metric(std::size_t b) const;

 private:
  const std::vector<Var>& tiled(std::size_t copies) const;

  std::vector<Var> params_;
  Var points_;
  Var output_;
  std::vector<Var> jacobian_;
  std::vector<Var> entries_;
  mutable std::map<std::size_t, std::vector<Var>> tiled_;
};

// J_f at a single point, output_dim x input_dim, from input_dim jvps.
Matrix explicit_jacobian(const Model& model, const Vector& point);
// Dense M_f = J^T J at a single point.
Matrix explicit_metric(const Model& model, const Vector& point);

// J^T J v through the operator.
Var metric_apply(const spectral::LinearOperator& op, Var v);
Vector metric_apply(const spectral::LinearOperator& op, const Vector& v);

}  // namespace specprop::density
