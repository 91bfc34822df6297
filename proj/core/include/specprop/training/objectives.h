#pragma once

#include <span>

#include "specprop/density/likelihood.h"
#include "specprop/training/energies.h"

namespace specprop::training {

struct LossGraph {
  Var loss;     // 1 x 1
  Var penalty;  // 1 x 1, rho * mean lambda_max
  density::LikelihoodGraph likelihood;
};

// E_z[ln Q(f(z)) - ln p(f(z))] + rho * mean lambda_max, for a Z->X model and
// latent batch z (2 x B) drawn from the prior. ln Q(f(z)) is taken from the
// implicit likelihood at z.
LossGraph reverse_kl_loss(const density::Model& model, std::span<const Var> params, const Energy& energy,
                          const Matrix& z, const density::Prior& prior, const spectral::EstimatorConfig& cfg,
                          double rho, const linalg::Rng& rng, density::LikelihoodOptions options = {});

// -E_x[ln Q(x)] (+ rho * mean lambda_max) for an X->Z model and a data batch
// x drawn from the target.
LossGraph forward_kl_loss(const density::Model& model, std::span<const Var> params, const Matrix& x,
                          const density::Prior& prior, const spectral::EstimatorConfig& cfg, double rho,
                          const linalg::Rng& rng, density::LikelihoodOptions options = {});

}  // namespace specprop::training
