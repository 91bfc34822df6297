#pragma once

#include <cmath>
#include <functional>

#include "specprop/density/model.h"
#include "specprop/linalg/matrix.h"
#include "specprop/linalg/rng.h"

namespace testing {

using specprop::linalg::Matrix;
using specprop::linalg::Rng;
using specprop::linalg::Vector;

inline Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c) {
  Matrix m(r, c);
  for (double& v : m.span()) v = rng.normal();
  return m;
}

inline Matrix random_symmetric(Rng& rng, std::size_t n) {
  Matrix m = random_matrix(rng, n, n);
  Matrix s(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) s(i, j) = 0.5 * (m(i, j) + m(j, i));
  return s;
}

// B^T B + I
inline Matrix random_spd_simple(Rng& rng, std::size_t n) {
  const Matrix b = random_matrix(rng, n, n);
  Matrix a = specprop::linalg::matmul(b, b, true, false);
  for (std::size_t i = 0; i < n; ++i) a(i, i) += 1.0;
  return a;
}

inline double rel_l2(const Vector& a, const Vector& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / den);
}

inline double cosine(const Vector& a, const Vector& b) {
  return specprop::linalg::dot(a.span(), b.span()) /
         (specprop::linalg::norm2(a.span()) * specprop::linalg::norm2(b.span()));
}

// Central differences of f around x, step h per coordinate.
inline Vector central_diff(const std::function<double(const Vector&)>& f, const Vector& x, double h) {
  Vector g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    Vector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g[i] = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

// Parameters of `model` set from the flat vector, value of f evaluated.
inline std::function<double(const Vector&)> with_params(specprop::density::Model& model,
                                                        std::function<double()> f) {
  return [&model, f](const Vector& theta) {
    const Vector saved = model.parameters().flatten();
    model.parameters().unflatten(theta);
    const double v = f();
    model.parameters().unflatten(saved);
    return v;
  };
}

}  // namespace testing
