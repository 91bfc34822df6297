#include "specprop/density/likelihood.h"

#include <cmath>
#include <limits>
#include <sstream>

#include "specprop/ad/derivatives.h"
#include "specprop/linalg/oracles.h"

namespace specprop::density {

std::unique_ptr<spectral::LinearOperator> make_metric_operator(const Model& model,
                                                               std::span<const Var> params, Var points,
                                                               MetricMode mode) {
  if (mode == MetricMode::kAssembled) return std::make_unique<AssembledMetricOperator>(model, params, points);
  return std::make_unique<MetricOperator>(model, params, points);
}

Var metric_output(const spectral::LinearOperator& op) {
  if (auto* a = dynamic_cast<const AssembledMetricOperator*>(&op)) return a->output();
  if (auto* m = dynamic_cast<const MetricOperator*>(&op)) return m->output();
  throw std::invalid_argument("metric_output: not a metric operator");
}

spectral::LogDetEstimate estimate_logdet(const spectral::LinearOperator& op,
                                         const spectral::EstimatorConfig& cfg, const linalg::Rng& rng,
                                         LogDetMethod method) {
  return method == LogDetMethod::kTaylor ? spectral::stochastic_logdet_taylor(op, cfg, rng)
                                         : spectral::stochastic_logdet_chebyshev(op, cfg, rng);
}

namespace {

// Combines prior and log-det terms with the direction's sign.
Var combine(Direction d, Var log_prior, Var logdet) {
  Var half = ad::scale(logdet, 0.5);
  return d == Direction::kLatentToData ? ad::sub(log_prior, half) : ad::add(log_prior, half);
}

Var prior_term(const Model& model, const Prior& prior, Var points, Var output) {
  return prior.log_density(model.direction() == Direction::kLatentToData ? points : output);
}

std::vector<Var> constant_params(ad::Tape& tape, const Model& model) {
  std::vector<Var> params;
  for (std::size_t i = 0; i < model.parameters().size(); ++i)
    params.push_back(tape.constant(model.parameters().value(i)));
  return params;
}

double batch_mean(Var row) { return ad::sum(row).scalar() / static_cast<double>(row.cols()); }

Var batch_mean_node(Var row) { return ad::scale(ad::sum(row), 1.0 / static_cast<double>(row.cols())); }

}  // namespace

LikelihoodGraph log_likelihood(const Model& model, std::span<const Var> params, Var points,
                               const Prior& prior, const spectral::EstimatorConfig& cfg,
                               const linalg::Rng& rng, LikelihoodOptions options) {
  auto op = make_metric_operator(model, params, points, options.metric);
  Var output = metric_output(*op);
  spectral::LogDetEstimate ld = estimate_logdet(*op, cfg, rng, options.method);
  Var lp = prior_term(model, prior, points, output);
  return {combine(model.direction(), lp, ld.logdet), lp, output, ld};
}

double log_likelihood(const Model& model, const Vector& point, const Prior& prior,
                      const spectral::EstimatorConfig& cfg, const linalg::Rng& rng,
                      LikelihoodOptions options) {
  ad::Tape tape;
  const std::vector<Var> params = constant_params(tape, model);
  return log_likelihood(model, params, tape.constant(Matrix::column(point)), prior, cfg, rng, options)
      .log_q.scalar();
}

std::vector<double> exact_logdets(const AssembledMetricOperator& op, bool strict) {
  std::vector<double> out(op.batch());
  for (std::size_t b = 0; b < op.batch(); ++b) {
    try {
      out[b] = linalg::cholesky_logdet(op.metric(b));
    } catch (const linalg::NotPositiveDefinite&) {
      if (!strict) {
        out[b] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      std::ostringstream os;
      os << "metric is not positive definite at batch member " << b << " (singular Jacobian)";
      throw SingularJacobian(os.str());
    }
  }
  return out;
}

ExactGraph exact_log_likelihood_graph(const Model& model, std::span<const Var> params, Var points,
                                      const Prior& prior) {
  AssembledMetricOperator op(model, params, points);
  ad::Tape& tape = points.tape();
  const std::size_t n = op.dim();
  const std::size_t batch = op.batch();
  const std::vector<double> exact = exact_logdets(op);

  std::vector<Matrix> inverse(batch);
  for (std::size_t b = 0; b < batch; ++b) inverse[b] = linalg::cholesky_inverse(op.metric(b));

  Var surrogate;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      Matrix weight(1, batch);
      for (std::size_t b = 0; b < batch; ++b) weight(0, b) = inverse[b](r, c);
      Var term = ad::mul(tape.constant(weight), op.entry(r, c));
      surrogate = surrogate.valid() ? ad::add(surrogate, term) : term;
    }
  }
  Matrix correction(1, batch);
  for (std::size_t b = 0; b < batch; ++b) correction(0, b) = exact[b] - surrogate.value()(0, b);
  Var logdet = ad::add(surrogate, tape.constant(correction));
  Var lp = prior_term(model, prior, points, op.output());
  return {combine(model.direction(), lp, logdet), logdet};
}

std::vector<double> exact_log_likelihoods(const Model& model, const Matrix& points, const Prior& prior,
                                          bool strict) {
  ad::Tape tape;
  const std::vector<Var> params = constant_params(tape, model);
  Var pts = tape.constant(points);
  AssembledMetricOperator op(model, params, pts);
  const std::vector<double> ld = exact_logdets(op, strict);
  const Matrix lp = prior_term(model, prior, pts, op.output()).value();
  std::vector<double> out(points.cols());
  const double sign = model.direction() == Direction::kLatentToData ? -0.5 : 0.5;
  for (std::size_t b = 0; b < out.size(); ++b) out[b] = lp(0, b) + sign * ld[b];
  return out;
}

double exact_log_likelihood(const Model& model, const Vector& point, const Prior& prior) {
  return exact_log_likelihoods(model, Matrix::column(point), prior)[0];
}

GradientResult spectral_grad(const Model& model, const Matrix& points, const Prior& prior,
                             const spectral::EstimatorConfig& cfg, const linalg::Rng& rng,
                             LikelihoodOptions options) {
  if (points.cols() == 0) throw std::invalid_argument("spectral_grad: empty batch");
  ad::Tape tape;
  const std::vector<Var> params = model.bind(tape);
  LikelihoodGraph g = log_likelihood(model, params, tape.constant(points), prior, cfg, rng, options);
  Var mean = batch_mean_node(g.log_q);
  return {model.gradient(mean, params), mean.scalar(), g.logdet.bound_violations};
}

GradientResult spectral_grad_points(const Model& model, const Matrix& points, const Prior& prior,
                                    const spectral::EstimatorConfig& cfg, const linalg::Rng& rng,
                                    LikelihoodOptions options) {
  if (points.cols() == 0) throw std::invalid_argument("spectral_grad_points: empty batch");
  ad::Tape tape;
  const std::vector<Var> params = constant_params(tape, model);
  Var pts = tape.variable(points);
  LikelihoodGraph g = log_likelihood(model, params, pts, prior, cfg, rng, options);
  Var mean = batch_mean_node(g.log_q);
  const Var wrt[1] = {pts};
  const std::vector<Var> grads = ad::gradients(mean, wrt);
  return {grads[0].value().flatten(), mean.scalar(), g.logdet.bound_violations};
}

GradientResult exact_grad(const Model& model, const Matrix& points, const Prior& prior) {
  if (points.cols() == 0) throw std::invalid_argument("exact_grad: empty batch");
  ad::Tape tape;
  const std::vector<Var> params = model.bind(tape);
  ExactGraph g = exact_log_likelihood_graph(model, params, tape.constant(points), prior);
  Var mean = batch_mean_node(g.log_q);
  return {model.gradient(mean, params), batch_mean(g.log_q), 0};
}

Var spectral_norm_penalty(const spectral::LinearOperator& op, double rho,
                          const spectral::EstimatorConfig& cfg, const linalg::Rng& rng) {
  if (!(rho >= 0.0)) throw std::invalid_argument("spectral_norm_penalty: rho must be >= 0");
  return ad::scale(spectral::power_method(op, cfg.power_iterations, rng), rho);
}

Var spectral_norm_penalty(const spectral::LogDetEstimate& estimate, double rho) {
  if (!(rho >= 0.0)) throw std::invalid_argument("spectral_norm_penalty: rho must be >= 0");
  return ad::scale(estimate.lambda_max, rho);
}

double relative_error(double estimated_log_likelihood, double exact_log_likelihood) {
  return estimated_log_likelihood - exact_log_likelihood;
}

}  // namespace specprop::density
