#include "specprop/spectral/linear_operator.h"

#include <algorithm>
#include <cmath>

namespace specprop::spectral {

using ad::Var;

DenseOperator::DenseOperator(ad::Tape& tape, const linalg::Matrix& matrix)
    : DenseOperator(tape.constant(matrix)) {}

DenseOperator::DenseOperator(Var matrix) : matrix_(matrix) {
  if (matrix.rows() != matrix.cols()) {
    throw linalg::DimensionError("DenseOperator: matrix is " + linalg::shape_string(matrix.value()));
  }
}

Var DenseOperator::apply(Var block) const {
  if (block.rows() != dim()) {
    throw linalg::DimensionError("DenseOperator::apply: block has " + std::to_string(block.rows()) +
                                 " rows, operator dimension is " + std::to_string(dim()));
  }
  return ad::matmul(matrix_, block);
}

AffineOperator::AffineOperator(const LinearOperator& base, Var alpha, Var beta)
    : base_(base), alpha_(alpha), beta_(beta) {
  if (alpha.rows() != 1 || alpha.cols() != base.batch() || beta.rows() != 1 ||
      beta.cols() != base.batch()) {
    throw linalg::DimensionError("AffineOperator: alpha and beta must be 1 x batch rows");
  }
}

bool AffineOperator::differentiable() const {
  return base_.differentiable() || alpha_.requires_grad() || beta_.requires_grad();
}

Var AffineOperator::apply(Var block) const {
  const std::size_t copies = block.cols() / batch();
  Var alpha = copies == 1 ? alpha_ : ad::tile_cols(alpha_, copies);
  Var beta = copies == 1 ? beta_ : ad::tile_cols(beta_, copies);
  return ad::scale_columns(base_.apply(block), alpha) - ad::scale_columns(block, beta);
}

double symmetry_defect(const LinearOperator& op, const linalg::Rng& rng, int pairs) {
  ad::Tape& tape = op.tape();
  const std::size_t n = op.dim();
  const std::size_t b = op.batch();
  double worst = 0.0;
  for (int k = 0; k < pairs; ++k) {
    linalg::Matrix u(n, b), v(n, b);
    for (std::size_t col = 0; col < b; ++col) {
      linalg::Rng ru = rng.split(2 * static_cast<std::uint64_t>(k)).split(col);
      linalg::Rng rv = rng.split(2 * static_cast<std::uint64_t>(k) + 1).split(col);
      u.set_col(col, linalg::standard_normal(ru, n));
      v.set_col(col, linalg::standard_normal(rv, n));
    }
    Var uv = tape.constant(u);
    Var vv = tape.constant(v);
    const linalg::Matrix au = op.apply(uv).value();
    const linalg::Matrix av = op.apply(vv).value();
    for (std::size_t col = 0; col < b; ++col) {
      double lhs = 0.0, rhs = 0.0, scale = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        lhs += u(r, col) * av(r, col);
        rhs += au(r, col) * v(r, col);
        scale += std::abs(u(r, col) * av(r, col)) + std::abs(au(r, col) * v(r, col));
      }
      worst = std::max(worst, std::abs(lhs - rhs) / std::max(scale, 1e-300));
    }
  }
  return worst;
}

}  // namespace specprop::spectral
