#include "specprop/spectral/estimators.h"

#include <cmath>
#include <sstream>

#include "specprop/linalg/oracles.h"

namespace specprop::spectral {

using ad::Var;
using linalg::Matrix;

void EstimatorConfig::validate() const {
  std::ostringstream os;
  if (order < 1) os << "order m must be >= 1 (got " << order << "); ";
  if (probes < 1) os << "probes p must be >= 1 (got " << probes << "); ";
  if (power_iterations < 1) os << "power iterations t must be >= 1 (got " << power_iterations << "); ";
  if (!(bound_multiplier >= 1.0) || !std::isfinite(bound_multiplier))
    os << "bound multiplier g must be >= 1 (got " << bound_multiplier << "); ";
  if (!(lower_bound > 0.0) || !std::isfinite(lower_bound))
    os << "lower bound epsilon must be > 0 (got " << lower_bound << "); ";
  const std::string msg = os.str();
  if (!msg.empty()) throw std::invalid_argument("EstimatorConfig: " + msg.substr(0, msg.size() - 2));
}

namespace {

Var constant_row(ad::Tape& tape, std::size_t cols, double value) {
  return tape.constant(Matrix(1, cols, value));
}

// Sum over probe blocks, divided by p: (1 x p*B) -> (1 x B).
Var probe_mean(Var per_column, int probes) {
  Var folded = probes == 1 ? per_column : ad::fold_cols(per_column, static_cast<std::size_t>(probes));
  return ad::scale(folded, 1.0 / probes);
}

void check_operator(const LinearOperator& op, const EstimatorConfig& cfg, const linalg::Rng& rng) {
  if (op.dim() == 0) throw linalg::DimensionError("estimator: operator has dimension 0");
  if (cfg.check_symmetry) {
    const double defect = symmetry_defect(op, rng.split(2));
    if (defect > 1e-8) {
      std::ostringstream os;
      os << "estimator: operator failed the symmetry spot check (defect " << defect << ")";
      throw linalg::NotSymmetric(os.str());
    }
  }
}

Var estimate_lambda_max(const LinearOperator& op, const EstimatorConfig& cfg, const linalg::Rng& rng) {
  Var lam = power_method(op, cfg.power_iterations, rng.split(0));
  const Matrix& v = lam.value();
  for (std::size_t b = 0; b < v.cols(); ++b) {
    if (!(v(0, b) > 0.0)) {
      std::ostringstream os;
      os << "estimator: power-method estimate " << v(0, b) << " for batch member " << b
         << " is not positive";
      throw DegenerateOperator(os.str());
    }
  }
  return lam;
}

// Counts probe columns whose Rayleigh quotient of A (recovered from
// <v, w1> through rq = (<v, w1> - shift) / slope, per batch member) is below
// epsilon. Rademacher probes have <v, v> = n.
std::size_t count_violations(const Matrix& vw1, std::size_t n, std::size_t batch,
                             const std::vector<double>& slope, const std::vector<double>& shift,
                             double epsilon) {
  std::size_t count = 0;
  const double nd = static_cast<double>(n);
  for (std::size_t c = 0; c < vw1.cols(); ++c) {
    const std::size_t b = c % batch;
    const double rq = (vw1(0, c) / nd - shift[b]) / slope[b];
    if (rq < epsilon) ++count;
  }
  return count;
}

}  // namespace

Var power_method(const LinearOperator& op, int iterations, const linalg::Rng& rng) {
  if (iterations < 1) throw std::invalid_argument("power_method: t must be >= 1");
  ad::Tape& tape = op.tape();
  const std::size_t n = op.dim();
  const std::size_t batch = op.batch();
  Matrix start(n, batch);
  for (std::size_t b = 0; b < batch; ++b) {
    linalg::Rng r = rng.split(b);
    start.set_col(b, linalg::random_unit(r, n));
  }
  Var v = tape.constant(start);
  // 1 where the iterate has vanished; keeps the divisions finite.
  Matrix dead(1, batch, 0.0);
  for (int k = 0; k < iterations; ++k) {
    Var w = op.apply(v);
    Var norms = ad::sqrt(ad::colwise_dot(w, w));
    for (std::size_t b = 0; b < batch; ++b) {
      if (norms.value()(0, b) == 0.0) dead(0, b) = 1.0;
    }
    Var safe = ad::add(norms, tape.constant(dead));
    v = ad::scale_columns(w, ad::reciprocal(safe));
  }
  Var num = ad::colwise_dot(v, op.apply(v));
  Var den = ad::add(ad::colwise_dot(v, v), tape.constant(dead));
  return ad::divide(num, den);
}

Matrix probe_block(const linalg::Rng& rng, std::size_t dim, std::size_t batch, int probes) {
  Matrix block(dim, batch * static_cast<std::size_t>(probes));
  for (std::size_t b = 0; b < batch; ++b) {
    const linalg::Rng member = rng.split(b);
    for (int j = 0; j < probes; ++j) {
      linalg::Rng r = member.split(static_cast<std::uint64_t>(j));
      block.set_col(static_cast<std::size_t>(j) * batch + b, linalg::rademacher(r, dim));
    }
  }
  return block;
}

Var hutchinson_trace(const LinearOperator& op, int probes, const linalg::Rng& rng) {
  if (probes < 1) throw std::invalid_argument("hutchinson_trace: p must be >= 1");
  Var v = op.tape().constant(probe_block(rng, op.dim(), op.batch(), probes));
  return probe_mean(ad::colwise_dot(v, op.apply(v)), probes);
}

Var stochastic_chebyshev_trace(const LinearOperator& op, const ChebyshevCoefficients& c, int probes,
                               const linalg::Rng& rng) {
  if (probes < 1) throw std::invalid_argument("stochastic_chebyshev_trace: p must be >= 1");
  if (c.c.empty()) throw std::invalid_argument("stochastic_chebyshev_trace: no coefficients");
  Var v = op.tape().constant(probe_block(rng, op.dim(), op.batch(), probes));
  Var w_prev = v;
  Var acc = ad::scale(ad::colwise_dot(v, w_prev), c.c[0]);
  if (c.order() >= 1) {
    Var w = op.apply(v);
    acc = ad::add(acc, ad::scale(ad::colwise_dot(v, w), c.c[1]));
    for (int i = 2; i <= c.order(); ++i) {
      Var next = ad::sub(ad::scale(op.apply(w), 2.0), w_prev);
      w_prev = w;
      w = next;
      acc = ad::add(acc, ad::scale(ad::colwise_dot(v, w), c.c[i]));
    }
  }
  return probe_mean(acc, probes);
}

LogDetEstimate stochastic_logdet_chebyshev(const LinearOperator& op, const EstimatorConfig& cfg,
                                           const linalg::Rng& rng) {
  cfg.validate();
  check_operator(op, cfg, rng);
  ad::Tape& tape = op.tape();
  const std::size_t n = op.dim();
  const std::size_t batch = op.batch();
  const double nd = static_cast<double>(n);

  Var lam = estimate_lambda_max(op, cfg, rng);
  Var lam_used = cfg.detach_bounds ? ad::detach(lam) : lam;
  Var nu = ad::scale(lam_used, cfg.bound_multiplier);
  Var mu = constant_row(tape, batch, cfg.lower_bound);
  Var total = ad::add(mu, nu);  // mu + nu

  std::size_t collapsed = 0;
  for (std::size_t b = 0; b < batch; ++b) {
    const double m = mu.value()(0, b), v = nu.value()(0, b);
    if (std::abs(v - m) <= 1e-8 * (v + m)) ++collapsed;
  }
  if (collapsed == batch) {
    // Sp(A-bar) is the single point a, where the interpolant is constant.
    Var a = ad::divide(mu, total);
    Var logdet = ad::add(ad::scale(ad::log(total), nd), ad::scale(ad::log(a), nd));
    return {logdet, lam, 0};
  }
  if (collapsed != 0) {
    throw DegenerateOperator(
        "stochastic_logdet_chebyshev: spectral interval collapsed for some batch members only");
  }

  // phi^{-1}(A / (mu + nu)) = alpha A - beta I.
  Var width = ad::sub(nu, mu);
  Var alpha = ad::scale(ad::reciprocal(width), 2.0);
  Var beta = ad::divide(total, width);
  AffineOperator rescaled(op, alpha, beta);

  // Coefficients of ln o phi per batch member: ln(h x_j + 1/2), h = (b - a) / 2.
  const int m = cfg.order;
  const std::vector<double> xs = chebyshev_abscissae(m);
  const std::vector<double> kvals = chebyshev_coefficient_matrix(m);
  const std::size_t terms = xs.size();
  Var xcol = tape.constant(Matrix(terms, 1, xs));
  Var kmat = tape.constant(Matrix(terms, terms, kvals));
  Var h = ad::scale(ad::divide(width, total), 0.5);
  Var svals = ad::log(ad::shift(ad::matmul(xcol, h), 0.5));
  Var coeffs = ad::matmul(kmat, svals);  // (m+1) x B

  const int p = cfg.probes;
  Var v = tape.constant(probe_block(rng.split(1), n, batch, p));
  std::vector<Var> moments;
  moments.reserve(terms);
  moments.push_back(constant_row(tape, batch, nd));  // <v, v> = n for Rademacher probes
  Var w_prev = v;
  Var w = rescaled.apply(v);
  Var vw1 = ad::colwise_dot(v, w);
  moments.push_back(probe_mean(vw1, p));
  for (int i = 2; i <= m; ++i) {
    Var next = ad::sub(ad::scale(rescaled.apply(w), 2.0), w_prev);
    w_prev = w;
    w = next;
    moments.push_back(probe_mean(ad::colwise_dot(v, w), p));
  }
  Var gamma = ad::sum_rows(ad::mul(coeffs, ad::concat_rows(moments)));
  Var logdet = ad::add(ad::scale(ad::log(total), nd), gamma);

  std::vector<double> slope(batch), shift(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    slope[b] = alpha.value()(0, b);
    shift[b] = -beta.value()(0, b);
  }
  const std::size_t violations =
      count_violations(vw1.value(), n, batch, slope, shift, cfg.lower_bound);
  return {logdet, lam, violations};
}

LogDetEstimate stochastic_logdet_taylor(const LinearOperator& op, const EstimatorConfig& cfg,
                                        const linalg::Rng& rng) {
  cfg.validate();
  check_operator(op, cfg, rng);
  ad::Tape& tape = op.tape();
  const std::size_t n = op.dim();
  const std::size_t batch = op.batch();
  const double nd = static_cast<double>(n);

  Var lam = estimate_lambda_max(op, cfg, rng);
  Var lam_used = cfg.detach_bounds ? ad::detach(lam) : lam;
  Var nu = ad::scale(lam_used, cfg.bound_multiplier);

  // I - A / nu.
  Var alpha = ad::neg(ad::reciprocal(nu));
  Var beta = constant_row(tape, batch, -1.0);
  AffineOperator complement(op, alpha, beta);

  const std::vector<double> coeffs = taylor_coefficients(cfg.order);
  const int p = cfg.probes;
  Var v = tape.constant(probe_block(rng.split(1), n, batch, p));
  Var w = complement.apply(v);
  Var vw1 = ad::colwise_dot(v, w);
  Var gamma = ad::scale(probe_mean(vw1, p), coeffs[1]);
  for (int i = 2; i <= cfg.order; ++i) {
    w = complement.apply(w);
    gamma = ad::add(gamma, ad::scale(probe_mean(ad::colwise_dot(v, w), p), coeffs[i]));
  }
  Var logdet = ad::add(ad::scale(ad::log(nu), nd), gamma);

  std::vector<double> slope(batch), shift(batch, 1.0);
  for (std::size_t b = 0; b < batch; ++b) slope[b] = alpha.value()(0, b);
  const std::size_t violations =
      count_violations(vw1.value(), n, batch, slope, shift, cfg.lower_bound);
  return {logdet, lam, violations};
}

double power_method(const Matrix& a, int iterations, const linalg::Rng& rng) {
  ad::Tape tape;
  DenseOperator op(tape, a);
  return power_method(op, iterations, rng).scalar();
}

double hutchinson_trace(const Matrix& a, int probes, const linalg::Rng& rng) {
  ad::Tape tape;
  DenseOperator op(tape, a);
  return hutchinson_trace(op, probes, rng).scalar();
}

double stochastic_chebyshev_trace(const Matrix& a, const ChebyshevCoefficients& c, int probes,
                                  const linalg::Rng& rng) {
  ad::Tape tape;
  DenseOperator op(tape, a);
  return stochastic_chebyshev_trace(op, c, probes, rng).scalar();
}

double stochastic_logdet_chebyshev(const Matrix& a, const EstimatorConfig& cfg,
                                   const linalg::Rng& rng) {
  ad::Tape tape;
  DenseOperator op(tape, a);
  return stochastic_logdet_chebyshev(op, cfg, rng).logdet.scalar();
}

double stochastic_logdet_taylor(const Matrix& a, const EstimatorConfig& cfg,
                                const linalg::Rng& rng) {
  ad::Tape tape;
  DenseOperator op(tape, a);
  return stochastic_logdet_taylor(op, cfg, rng).logdet.scalar();
}

}  // namespace specprop::spectral
