#include "specprop/density/metric.h"

#include "specprop/ad/derivatives.h"

namespace specprop::density {

namespace {

bool any_requires_grad(std::span<const Var> params, Var points) {
  if (points.requires_grad()) return true;
  for (const Var& p : params)
    if (p.requires_grad()) return true;
  return false;
}

std::size_t copies_of(Var block, std::size_t dim, std::size_t batch) {
  if (block.rows() != dim || block.cols() == 0 || block.cols() % batch != 0) {
    throw linalg::DimensionError("metric operator: block is " + linalg::shape_string(block.value()) +
                                 ", expected " + std::to_string(dim) + " x (k * " +
                                 std::to_string(batch) + ")");
  }
  return block.cols() / batch;
}

}  // namespace

MetricOperator::MetricOperator(const Model& model, std::span<const Var> params, Var points)
    : model_(model), params_(params.begin(), params.end()), points_(points) {
  if (points.rows() != model.input_dim()) {
    throw linalg::DimensionError("MetricOperator: points have " + std::to_string(points.rows()) +
                                 " rows, model input dimension is " + std::to_string(model.input_dim()));
  }
}

bool MetricOperator::differentiable() const { return any_requires_grad(params_, points_); }

const std::pair<Var, Var>& MetricOperator::graph(std::size_t copies) const {
  auto it = graphs_.find(copies);
  if (it == graphs_.end()) {
    Var in = copies == 1 ? points_ : ad::tile_cols(points_, copies);
    Var out = model_.forward(params_, in);
    it = graphs_.emplace(copies, std::make_pair(in, out)).first;
  }
  return it->second;
}

Var MetricOperator::output() const { return graph(1).second; }

Var MetricOperator::apply(Var block) const {
  const auto& [in, out] = graph(copies_of(block, dim(), batch()));
  Var jv = ad::jvp(out, in, block);
  return ad::vjp(out, in, jv);
}

AssembledMetricOperator::AssembledMetricOperator(const Model& model, std::span<const Var> params,
                                                 Var points)
    : params_(params.begin(), params.end()), points_(points) {
  const std::size_t n = model.input_dim();
  if (points.rows() != n) {
    throw linalg::DimensionError("AssembledMetricOperator: points have " + std::to_string(points.rows()) +
                                 " rows, model input dimension is " + std::to_string(n));
  }
  ad::Tape& tape = points.tape();
  const std::size_t b = points.cols();
  output_ = model.forward(params_, points_);
  jacobian_.reserve(n);
  for (std::size_t c = 0; c < n; ++c) {
    Matrix e(n, b, 0.0);
    for (std::size_t k = 0; k < b; ++k) e(c, k) = 1.0;
    jacobian_.push_back(ad::jvp(output_, points_, tape.constant(e)));
  }
  entries_.resize(n * n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = r; c < n; ++c) {
      entries_[r * n + c] = ad::colwise_dot(jacobian_[r], jacobian_[c]);
      entries_[c * n + r] = entries_[r * n + c];
    }
  }
}

bool AssembledMetricOperator::differentiable() const { return any_requires_grad(params_, points_); }

const std::vector<Var>& AssembledMetricOperator::tiled(std::size_t copies) const {
  auto it = tiled_.find(copies);
  if (it == tiled_.end()) {
    std::vector<Var> t;
    t.reserve(entries_.size());
    for (const Var& e : entries_) t.push_back(copies == 1 ? e : ad::tile_cols(e, copies));
    it = tiled_.emplace(copies, std::move(t)).first;
  }
  return it->second;
}

Var AssembledMetricOperator::apply(Var block) const {
  const std::size_t n = dim();
  const std::vector<Var>& m = tiled(copies_of(block, n, batch()));
  std::vector<Var> rows_in;
  rows_in.reserve(n);
  for (std::size_t c = 0; c < n; ++c) rows_in.push_back(n == 1 ? block : ad::slice_rows(block, c, 1));
  std::vector<Var> rows_out;
  rows_out.reserve(n);
  for (std::size_t r = 0; r < n; ++r) {
    Var acc = ad::mul(m[r * n], rows_in[0]);
    for (std::size_t c = 1; c < n; ++c) acc = ad::add(acc, ad::mul(m[r * n + c], rows_in[c]));
    rows_out.push_back(acc);
  }
  return n == 1 ? rows_out[0] : ad::concat_rows(rows_out);
}

Matrix AssembledMetricOperator::metric(std::size_t b) const {
  const std::size_t n = dim();
  Matrix out(n, n);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) out(r, c) = entries_[r * n + c].value()(0, b);
  return out;
}

Matrix explicit_jacobian(const Model& model, const Vector& point) {
  ad::Tape tape;
  std::vector<Var> params;
  for (std::size_t i = 0; i < model.parameters().size(); ++i)
    params.push_back(tape.constant(model.parameters().value(i)));
  AssembledMetricOperator op(model, params, tape.constant(Matrix::column(point)));
  Matrix j(model.output_dim(), model.input_dim());
  for (std::size_t c = 0; c < model.input_dim(); ++c) j.set_col(c, op.jacobian_column(c).value().col(0));
  return j;
}

Matrix explicit_metric(const Model& model, const Vector& point) {
  const Matrix j = explicit_jacobian(model, point);
  return linalg::matmul(j, j, true, false);
}

Var metric_apply(const spectral::LinearOperator& op, Var v) { return op.apply(v); }

Vector metric_apply(const spectral::LinearOperator& op, const Vector& v) {
  if (op.batch() != 1) throw linalg::DimensionError("metric_apply: operator holds several points");
  return op.apply(op.tape().constant(Matrix::column(v))).value().col(0);
}

}  // namespace specprop::density
