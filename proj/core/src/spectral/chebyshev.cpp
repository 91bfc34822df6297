#include "specprop/spectral/chebyshev.h"

#include <cmath>
#include <numbers>
#include <sstream>

namespace specprop::spectral {

RescaleMaps rescale_maps(double a, double b) {
  if (!(a > 0.0) || !(a < b)) {
    std::ostringstream os;
    os << "rescale_maps: need 0 < a < b, got a=" << a << " b=" << b;
    throw std::invalid_argument(os.str());
  }
  return {a, b};
}

std::vector<double> chebyshev_abscissae(int order) {
  if (order < 0) throw std::invalid_argument("chebyshev_abscissae: negative order");
  std::vector<double> x(static_cast<std::size_t>(order) + 1);
  const double m1 = static_cast<double>(order + 1);
  for (int j = 0; j <= order; ++j) x[j] = std::cos(std::numbers::pi * (j + 0.5) / m1);
  return x;
}

std::vector<double> chebyshev_polynomials(double x, int order) {
  std::vector<double> t(static_cast<std::size_t>(order) + 1);
  t[0] = 1.0;
  if (order >= 1) t[1] = x;
  for (int i = 2; i <= order; ++i) t[i] = 2.0 * x * t[i - 1] - t[i - 2];
  return t;
}

double ChebyshevCoefficients::evaluate_reference(double x) const {
  // Clenshaw recurrence.
  double b1 = 0.0, b2 = 0.0;
  for (int i = order(); i >= 1; --i) {
    const double tmp = 2.0 * x * b1 - b2 + c[i];
    b2 = b1;
    b1 = tmp;
  }
  return x * b1 - b2 + c[0];
}

double ChebyshevCoefficients::evaluate(double y) const {
  return evaluate_reference(RescaleMaps{a, b}.inverse(y));
}

std::vector<double> chebyshev_coefficient_matrix(int order) {
  const std::vector<double> x = chebyshev_abscissae(order);
  const std::size_t n = x.size();
  std::vector<double> k(n * n);
  for (std::size_t j = 0; j < n; ++j) {
    const std::vector<double> t = chebyshev_polynomials(x[j], order);
    for (std::size_t i = 0; i < n; ++i) {
      k[i * n + j] = (i == 0 ? 1.0 : 2.0) * t[i] / static_cast<double>(n);
    }
  }
  return k;
}

ChebyshevCoefficients chebyshev_coefficients(const std::function<double(double)>& s, double a,
                                             double b, int order) {
  if (order < 1) throw std::invalid_argument("chebyshev_coefficients: order must be >= 1");
  const RescaleMaps phi = rescale_maps(a, b);
  const std::vector<double> x = chebyshev_abscissae(order);
  const std::size_t n = x.size();
  std::vector<double> values(n);
  for (std::size_t j = 0; j < n; ++j) {
    values[j] = s(phi.forward(x[j]));
    if (!std::isfinite(values[j])) {
      std::ostringstream os;
      os << "chebyshev_coefficients: S is not finite at " << phi.forward(x[j]);
      throw std::domain_error(os.str());
    }
  }
  const std::vector<double> k = chebyshev_coefficient_matrix(order);
  ChebyshevCoefficients out{std::vector<double>(n, 0.0), a, b};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out.c[i] += k[i * n + j] * values[j];
  return out;
}

std::vector<double> taylor_coefficients(int order) {
  if (order < 1) throw std::invalid_argument("taylor_coefficients: order must be >= 1");
  std::vector<double> c(static_cast<std::size_t>(order) + 1, 0.0);
  for (int i = 1; i <= order; ++i) c[i] = -1.0 / i;
  return c;
}

}  // namespace specprop::spectral
