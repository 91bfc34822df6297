#pragma once

#include <stdexcept>
#include <vector>

#include "specprop/ad/tape.h"
#include "specprop/linalg/matrix.h"
#include "specprop/linalg/rng.h"
#include "specprop/spectral/chebyshev.h"
#include "specprop/spectral/linear_operator.h"

namespace specprop::spectral {

class DegenerateOperator : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EstimatorConfig {
  int order = 10;                 // m
  int probes = 20;                // p
  int power_iterations = 20;      // t
  double bound_multiplier = 1.2;  // g
  double lower_bound = 0.1;       // epsilon, used as mu
  // Treat the spectral bounds as constants when differentiating.
  bool detach_bounds = false;
  // Spot-check operator symmetry before estimating (three random pairs).
  bool check_symmetry = false;

  // Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

// Per-batch-member results, each a 1 x batch row on the operator's tape.
struct LogDetEstimate {
  ad::Var logdet;
  ad::Var lambda_max;
  // Probes whose Rayleigh quotient fell below the stipulated lower bound.
  std::size_t bound_violations = 0;
};

// Rayleigh quotient after `iterations` normalized power iterations from a
// random unit start drawn from rng.split(b) for batch member b. Members whose
// iterate vanishes get 0.
ad::Var power_method(const LinearOperator& op, int iterations, const linalg::Rng& rng);

// Rademacher probe block, dim x (probes * batch). Column j * batch + b is
// drawn from rng.split(b).split(j).
linalg::Matrix probe_block(const linalg::Rng& rng, std::size_t dim, std::size_t batch, int probes);

// (1/p) sum_j <v_j, A v_j>.
ad::Var hutchinson_trace(const LinearOperator& op, int probes, const linalg::Rng& rng);

// (1/p) sum_j <v_j, sum_i c_i T_i(A) v_j> with T_i(A) v built by the
// three-term recurrence; exactly m operator applications per probe. The
// caller is responsible for Sp(A) lying in [-1, 1].
ad::Var stochastic_chebyshev_trace(const LinearOperator& op, const ChebyshevCoefficients& c,
                                   int probes, const linalg::Rng& rng);

// Chebyshev log-determinant with power-method upper bound and the lower
// bound epsilon; differentiable through every operator application and,
// unless cfg.detach_bounds, through the bound estimate as well.
LogDetEstimate stochastic_logdet_chebyshev(const LinearOperator& op, const EstimatorConfig& cfg,
                                           const linalg::Rng& rng);

// Taylor-series log-determinant: ln det A = n ln(nu) + tr ln(I - (I - A/nu)).
LogDetEstimate stochastic_logdet_taylor(const LinearOperator& op, const EstimatorConfig& cfg,
                                        const linalg::Rng& rng);

// Convenience wrappers for explicit matrices.
double power_method(const linalg::Matrix& a, int iterations, const linalg::Rng& rng);
double hutchinson_trace(const linalg::Matrix& a, int probes, const linalg::Rng& rng);
double stochastic_chebyshev_trace(const linalg::Matrix& a, const ChebyshevCoefficients& c,
                                  int probes, const linalg::Rng& rng);
double stochastic_logdet_chebyshev(const linalg::Matrix& a, const EstimatorConfig& cfg,
                                   const linalg::Rng& rng);
double stochastic_logdet_taylor(const linalg::Matrix& a, const EstimatorConfig& cfg,
                                const linalg::Rng& rng);

}  // namespace specprop::spectral
