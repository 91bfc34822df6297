#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

namespace specprop::spectral {

// Affine bijection between [-1, 1] and [a, b].
struct RescaleMaps {
  double a;
  double b;

  // [-1, 1] -> [a, b]
  double forward(double x) const { return 0.5 * (b - a) * x + 0.5 * (b + a); }
  // [a, b] -> [-1, 1]
  double inverse(double y) const { return (2.0 * y - (b + a)) / (b - a); }
};

// Throws std::invalid_argument unless 0 < a < b.
RescaleMaps rescale_maps(double a, double b);

// x_j = cos(pi (j + 1/2) / (m + 1)), j = 0..m.
std::vector<double> chebyshev_abscissae(int order);

// T_0(x) .. T_m(x) by the three-term recurrence.
std::vector<double> chebyshev_polynomials(double x, int order);

struct ChebyshevCoefficients {
  std::vector<double> c;  // c_0 .. c_m
  double a = 0.0;
  double b = 1.0;

  int order() const { return static_cast<int>(c.size()) - 1; }
  // Degree-m interpolant on [-1, 1]: sum_i c_i T_i(x).
  double evaluate_reference(double x) const;
  // The interpolant of S on [a, b]: sum_i c_i T_i(phi^{-1}(y)).
  double evaluate(double y) const;
};

// Coefficients of the degree-m interpolant of S o phi at the Chebyshev
// abscissae, where phi maps [-1, 1] onto [a, b]. Throws std::domain_error if
// S is not finite at an abscissa.
ChebyshevCoefficients chebyshev_coefficients(const std::function<double(double)>& s, double a,
                                             double b, int order);

// Matrix K with K[i][j] = k_i T_i(x_j) / (m + 1), k_0 = 1 and k_i = 2,
// so that c = K * (S o phi)(x). Row-major, (m+1) x (m+1).
std::vector<double> chebyshev_coefficient_matrix(int order);

// Coefficients of ln(1 - x) = -sum_{i>=1} x^i / i, truncated at order m:
// c_0 = 0, c_i = -1/i.
std::vector<double> taylor_coefficients(int order);

}  // namespace specprop::spectral
