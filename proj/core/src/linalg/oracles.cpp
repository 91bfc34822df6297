#include "specprop/linalg/oracles.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace specprop::linalg {

Matrix cholesky_factor(const Matrix& a) {
  if (a.rows() != a.cols()) throw DimensionError("cholesky: matrix is not square");
  const std::size_t n = a.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) {
      std::ostringstream os;
      os << "matrix is not positive definite (pivot " << j << " = " << d << ")";
      throw NotPositiveDefinite(os.str());
    }
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

double cholesky_logdet(const Matrix& a) {
  const Matrix l = cholesky_factor(a);
  double s = 0.0;
  for (std::size_t i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
  return 2.0 * s;
}

Matrix cholesky_inverse(const Matrix& a) {
  const Matrix l = cholesky_factor(a);
  const std::size_t n = l.rows();
  // Invert L by forward substitution, then A^{-1} = L^{-T} L^{-1}.
  Matrix linv(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    linv(c, c) = 1.0 / l(c, c);
    for (std::size_t r = c + 1; r < n; ++r) {
      double s = 0.0;
      for (std::size_t k = c; k < r; ++k) s -= l(r, k) * linv(k, c);
      linv(r, c) = s / l(r, r);
    }
  }
  return matmul(linv, linv, true, false);
}

SymmetricEigen sym_eig(const Matrix& input) {
  if (input.rows() != input.cols()) throw NotSymmetric("sym_eig: matrix is not square");
  if (relative_asymmetry(input) > 1e-8) throw NotSymmetric("sym_eig: matrix is not symmetric");
  const std::size_t n = input.rows();
  Matrix a = input;
  // Symmetrize exactly so rotations see a consistent upper triangle.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) a(i, j) = a(j, i) = 0.5 * (a(i, j) + a(j, i));
  Matrix v = Matrix::identity(n);

  const double scale = frobenius_norm(a);
  const double tol = 1e-12 * scale;
  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
    return std::sqrt(s);
  };

  constexpr int kMaxSweeps = 100;
  int sweep = 0;
  while (sweep < kMaxSweeps && off_norm() > tol) {
    ++sweep;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) > a(j, j); });

  SymmetricEigen out{Vector(n), Matrix(n, n), sweep};
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t src = order[k];
    out.eigenvalues[k] = a(src, src);
    std::size_t arg = 0;
    for (std::size_t r = 1; r < n; ++r)
      if (std::abs(v(r, src)) > std::abs(v(arg, src))) arg = r;
    const double sign = v(arg, src) < 0.0 ? -1.0 : 1.0;
    for (std::size_t r = 0; r < n; ++r) out.eigenvectors(r, k) = sign * v(r, src);
  }
  return out;
}

Matrix orthonormalize(const Matrix& a) {
  Matrix q = a;
  const std::size_t n = a.rows();
  for (std::size_t c = 0; c < a.cols(); ++c) {
    for (std::size_t prev = 0; prev < c; ++prev) {
      double d = 0.0;
      for (std::size_t r = 0; r < n; ++r) d += q(r, prev) * q(r, c);
      for (std::size_t r = 0; r < n; ++r) q(r, c) -= d * q(r, prev);
    }
    double len = 0.0;
    for (std::size_t r = 0; r < n; ++r) len += q(r, c) * q(r, c);
    len = std::sqrt(len);
    if (len == 0.0) throw DimensionError("orthonormalize: rank-deficient input");
    for (std::size_t r = 0; r < n; ++r) q(r, c) /= len;
  }
  return q;
}

SpdSample random_spd(Rng& rng, std::size_t n, double kappa, double lambda_min) {
  if (n == 0 || !(kappa >= 1.0) || !(lambda_min > 0.0)) {
    throw std::invalid_argument("random_spd: need n > 0, kappa >= 1, lambda_min > 0");
  }
  Matrix g(n, n);
  for (double& x : g.span()) x = rng.normal();
  const Matrix q = orthonormalize(g);

  Vector lambda(n);
  const double log_kappa = std::log(kappa);
  for (std::size_t i = 0; i < n; ++i) lambda[i] = lambda_min * std::exp(rng.uniform() * log_kappa);
  std::sort(lambda.begin(), lambda.end());
  lambda[0] = lambda_min;
  if (n > 1) lambda[n - 1] = lambda_min * kappa;

  Matrix scaled = q;
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) scaled(r, c) *= lambda[c];
  Matrix m = matmul(scaled, q, false, true);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) m(i, j) = m(j, i) = 0.5 * (m(i, j) + m(j, i));
  return {std::move(m), std::move(lambda)};
}

}  // namespace specprop::linalg
