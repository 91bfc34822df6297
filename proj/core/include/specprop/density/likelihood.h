#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "specprop/density/metric.h"
#include "specprop/density/model.h"
#include "specprop/density/prior.h"
#include "specprop/spectral/estimators.h"

namespace specprop::density {

class SingularJacobian : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class MetricMode { kMatrixFree, kAssembled };
enum class LogDetMethod { kChebyshev, kTaylor };

struct LikelihoodOptions {
  MetricMode metric = MetricMode::kMatrixFree;
  LogDetMethod method = LogDetMethod::kChebyshev;
};

// Builds the metric operator for the columns of `points`.
std::unique_ptr<spectral::LinearOperator> make_metric_operator(const Model& model,
                                                               std::span<const Var> params, Var points,
                                                               MetricMode mode);
// f(points) from an operator made by make_metric_operator.
Var metric_output(const spectral::LinearOperator& op);

spectral::LogDetEstimate estimate_logdet(const spectral::LinearOperator& op,
                                         const spectral::EstimatorConfig& cfg, const linalg::Rng& rng,
                                         LogDetMethod method);

struct LikelihoodGraph {
  Var log_q;      // 1 x B
  Var log_prior;  // 1 x B, ln P_Z at z (Z->X) or at f(x) (X->Z)
  Var output;     // f(points)
  spectral::LogDetEstimate logdet;
};

// ln Q at every column of `points` with the stochastic log-determinant:
//   Z->X (points are z):  ln P_Z(z) - 1/2 ln det M_f(z)
//   X->Z (points are x):  ln P_Z(f(x)) + 1/2 ln det M_f(x)
LikelihoodGraph log_likelihood(const Model& model, std::span<const Var> params, Var points,
                               const Prior& prior, const spectral::EstimatorConfig& cfg,
                               const linalg::Rng& rng, LikelihoodOptions options = {});
double log_likelihood(const Model& model, const Vector& point, const Prior& prior,
                      const spectral::EstimatorConfig& cfg, const linalg::Rng& rng,
                      LikelihoodOptions options = {});

// Same quantity with ln det from a Cholesky factorization of the explicit
// metric. Throws SingularJacobian when M_f is not positive definite.
double exact_log_likelihood(const Model& model, const Vector& point, const Prior& prior);
// With strict = false, points with a singular metric yield NaN instead of
// throwing.
std::vector<double> exact_log_likelihoods(const Model& model, const Matrix& points, const Prior& prior,
                                          bool strict = true);
// Exact per-point ln det M_f for an assembled operator's batch.
std::vector<double> exact_logdets(const AssembledMetricOperator& op, bool strict = true);

struct ExactGraph {
  Var log_q;   // 1 x B
  Var logdet;  // 1 x B
};
// Graph whose value is the exact log-likelihood and whose first derivative
// is exact: ln det M is replaced by tr(C M) with C = M^{-1} held constant,
// shifted to the exact value.
ExactGraph exact_log_likelihood_graph(const Model& model, std::span<const Var> params, Var points,
                                      const Prior& prior);

struct GradientResult {
  Vector gradient;
  double value = 0.0;  // batch mean of ln Q
  std::size_t bound_violations = 0;
};

// Gradient w.r.t. the model parameters of the batch-mean seeded ln Q
// estimate. Pure function of (parameters, points, seed).
GradientResult spectral_grad(const Model& model, const Matrix& points, const Prior& prior,
                             const spectral::EstimatorConfig& cfg, const linalg::Rng& rng,
                             LikelihoodOptions options = {});
// Gradient of the same quantity w.r.t. the points, flattened row-major
// (dim x B).
GradientResult spectral_grad_points(const Model& model, const Matrix& points, const Prior& prior,
                                    const spectral::EstimatorConfig& cfg, const linalg::Rng& rng,
                                    LikelihoodOptions options = {});
// Gradient w.r.t. the parameters of the batch-mean exact ln Q.
GradientResult exact_grad(const Model& model, const Matrix& points, const Prior& prior);

// rho * lambda_max(M_f) per batch member, through t recorded power
// iterations.
Var spectral_norm_penalty(const spectral::LinearOperator& op, double rho,
                          const spectral::EstimatorConfig& cfg, const linalg::Rng& rng);
// Reuses the power-method estimate already made by the log-det estimator.
Var spectral_norm_penalty(const spectral::LogDetEstimate& estimate, double rho);

// ln l_hat - ln l.
double relative_error(double estimated_log_likelihood, double exact_log_likelihood);

}  // namespace specprop::density
