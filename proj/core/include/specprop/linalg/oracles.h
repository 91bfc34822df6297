#pragma once

#include <stdexcept>

#include "specprop/linalg/matrix.h"
#include "specprop/linalg/rng.h"

namespace specprop::linalg {

class NotPositiveDefinite : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotSymmetric : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Lower-triangular L with A = L L^T. Throws NotPositiveDefinite on a
// non-positive pivot.
Matrix cholesky_factor(const Matrix& a);

// ln det(A) for symmetric positive definite A.
double cholesky_logdet(const Matrix& a);

// A^{-1} for symmetric positive definite A.
Matrix cholesky_inverse(const Matrix& a);

struct SymmetricEigen {
  Vector eigenvalues;   // descending
  Matrix eigenvectors;  // column i pairs with eigenvalues[i]
  int sweeps = 0;
};

// Cyclic Jacobi eigensolver for dense symmetric matrices. Sweeps until the
// off-diagonal Frobenius norm drops below 1e-12 * ||A||_F. Each eigenvector's
// sign is fixed so that its largest-magnitude component is positive.
SymmetricEigen sym_eig(const Matrix& a);

// Q R factorization by modified Gram-Schmidt; returns Q only.
Matrix orthonormalize(const Matrix& a);

struct SpdSample {
  Matrix matrix;
  Vector eigenvalues;  // ascending as generated
};

// Q diag(lambda) Q^T with Q Haar-random orthogonal and lambda log-uniform in
// [lambda_min, kappa * lambda_min]; both endpoints are always present so the
// condition number is exactly kappa.
SpdSample random_spd(Rng& rng, std::size_t n, double kappa, double lambda_min = 1.0);

}  // namespace specprop::linalg
