#include "specprop/training/objectives.h"

#include <stdexcept>

namespace specprop::training {

namespace {

Var mean(Var row) { return ad::scale(ad::sum(row), 1.0 / static_cast<double>(row.cols())); }

Var penalty_term(const density::LikelihoodGraph& g, double rho) {
  return mean(density::spectral_norm_penalty(g.logdet, rho));
}

}  // namespace

LossGraph reverse_kl_loss(const density::Model& model, std::span<const Var> params, const Energy& energy,
                          const Matrix& z, const density::Prior& prior, const spectral::EstimatorConfig& cfg,
                          double rho, const linalg::Rng& rng, density::LikelihoodOptions options) {
  if (model.direction() != density::Direction::kLatentToData) {
    throw std::invalid_argument("reverse_kl_loss: model must map Z to X");
  }
  if (z.cols() == 0) throw std::invalid_argument("reverse_kl_loss: empty batch");
  ad::Tape& tape = params.empty() ? throw std::invalid_argument("reverse_kl_loss: no parameters")
                                  : params[0].tape();
  density::LikelihoodGraph g = density::log_likelihood(model, params, tape.constant(z), prior, cfg, rng, options);
  Var target = energy.log_density(g.output);
  Var penalty = penalty_term(g, rho);
  Var loss = ad::add(mean(ad::sub(g.log_q, target)), penalty);
  return {loss, penalty, g};
}

LossGraph forward_kl_loss(const density::Model& model, std::span<const Var> params, const Matrix& x,
                          const density::Prior& prior, const spectral::EstimatorConfig& cfg, double rho,
                          const linalg::Rng& rng, density::LikelihoodOptions options) {
  if (model.direction() != density::Direction::kDataToLatent) {
    throw std::invalid_argument("forward_kl_loss: model must map X to Z");
  }
  if (x.cols() == 0) throw std::invalid_argument("forward_kl_loss: empty batch");
  ad::Tape& tape = params.empty() ? throw std::invalid_argument("forward_kl_loss: no parameters")
                                  : params[0].tape();
  density::LikelihoodGraph g = density::log_likelihood(model, params, tape.constant(x), prior, cfg, rng, options);
  Var penalty = penalty_term(g, rho);
  Var loss = ad::add(ad::neg(mean(g.log_q)), penalty);
  return {loss, penalty, g};
}

}  // namespace specprop::training
