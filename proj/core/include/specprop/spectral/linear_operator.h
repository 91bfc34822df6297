#pragma once

#include <cstddef>

#include "specprop/ad/tape.h"
#include "specprop/linalg/matrix.h"
#include "specprop/linalg/rng.h"

namespace specprop::spectral {

// A family of `batch()` symmetric positive semi-definite operators of size
// dim() x dim(), accessed only through products.
//
// apply() takes a dim x (k * batch) block whose column c is acted on by
// operator c % batch, so k probe vectors per operator travel together.
// Products are recorded on tape(); when differentiable() is true the
// result depends on differentiable leaves and can be backpropagated.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;

  virtual std::size_t dim() const = 0;
  virtual std::size_t batch() const { return 1; }
  virtual ad::Var apply(ad::Var block) const = 0;
  virtual bool differentiable() const = 0;
  virtual ad::Tape& tape() const = 0;
};

// Explicit n x n matrix. Differentiable when the matrix node is.
class DenseOperator final : public LinearOperator {
 public:
  DenseOperator(ad::Tape& tape, const linalg::Matrix& matrix);
  explicit DenseOperator(ad::Var matrix);

  std::size_t dim() const override { return matrix_.rows(); }
  ad::Var apply(ad::Var block) const override;
  bool differentiable() const override { return matrix_.requires_grad(); }
  ad::Tape& tape() const override { return matrix_.tape(); }

 private:
  ad::Var matrix_;
};

// alpha_b * A_b - beta_b * I for every batch member b. alpha and beta are
// 1 x batch rows and may themselves be differentiable.
class AffineOperator final : public LinearOperator {
 public:
  AffineOperator(const LinearOperator& base, ad::Var alpha, ad::Var beta);

  std::size_t dim() const override { return base_.dim(); }
  std::size_t batch() const override { return base_.batch(); }
  ad::Var apply(ad::Var block) const override;
  bool differentiable() const override;
  ad::Tape& tape() const override { return base_.tape(); }

 private:
  const LinearOperator& base_;
  ad::Var alpha_;
  ad::Var beta_;
};

// Largest relative violation of <u, A v> = <A u, v> over `pairs` random
// pairs per batch member.
double symmetry_defect(const LinearOperator& op, const linalg::Rng& rng, int pairs = 3);

}  // namespace specprop::spectral
