#include "specprop/training/adam.h"

#include <cmath>
#include <sstream>

namespace specprop::training {

void adam_step(AdamState& state, linalg::Vector& theta, const linalg::Vector& grad, const AdamConfig& cfg) {
  const std::size_t n = theta.size();
  if (grad.size() != n || state.m.size() != n || state.v.size() != n) {
    throw linalg::DimensionError("adam_step: theta, gradient and moments must have equal length");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(grad[i])) {
      std::ostringstream os;
      os << "adam_step: non-finite gradient component " << i << " (" << grad[i] << ") at step "
         << state.step + 1;
      throw NumericalFailure(os.str());
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < n; ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grad[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    theta[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.epsilon);
  }
}

}  // namespace specprop::training
