#pragma once

#include <cstdint>
#include <stdexcept>

#include "specprop/linalg/matrix.h"

namespace specprop::training {

class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::uint64_t step = 0;
  linalg::Vector m;
  linalg::Vector v;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

// One bias-corrected Adam update of theta along -grad (minimization).
// Throws NumericalFailure on a non-finite gradient, leaving both state and
// theta untouched.
void adam_step(AdamState& state, linalg::Vector& theta, const linalg::Vector& grad, const AdamConfig& cfg);

}  // namespace specprop::training
