#include "specprop/latent/analysis.h"

#include <cmath>
#include <limits>

#include "specprop/density/metric.h"
#include "specprop/io/csv.h"
#include "specprop/linalg/oracles.h"

namespace specprop::latent {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double distance(const Vector& a, const Vector& b) { return linalg::norm2((a - b).span()); }

Vector displaced(const Vector& z, double alpha, const Vector& dir) { return z + alpha * dir; }

}  // namespace

std::unique_ptr<density::LinearModel> synthetic_linear_generator(std::span<const double> singular_values,
                                                                 std::size_t output_dim, linalg::Rng& rng) {
  const std::size_t n = singular_values.size();
  if (n == 0) throw std::invalid_argument("synthetic generator needs at least one singular value");
  const std::size_t m = output_dim == 0 ? n : output_dim;
  if (m < n) throw std::invalid_argument("synthetic generator: output_dim must be >= the latent dimension");
  Matrix gu(m, n), gv(n, n);
  for (double& v : gu.span()) v = rng.normal();
  for (double& v : gv.span()) v = rng.normal();
  const Matrix u = linalg::orthonormalize(gu);
  const Matrix v = linalg::orthonormalize(gv);
  Matrix a = linalg::matmul(linalg::matmul(u, Matrix::diagonal(singular_values)), v, false, true);
  return std::make_unique<density::LinearModel>(std::move(a), density::Direction::kLatentToData);
}

spectral::EstimatorConfig TrajectoryConfig::default_estimator() {
  spectral::EstimatorConfig c;
  c.order = 5;
  c.probes = 20;
  c.power_iterations = 20;
  c.bound_multiplier = 1.1;
  c.lower_bound = 1e-4;
  return c;
}

double Trajectory::log_ratio_estimate() const {
  return points.back().log_q_estimate - points.front().log_q_estimate;
}
double Trajectory::log_ratio_exact() const { return points.back().log_q_exact - points.front().log_q_exact; }
double Trajectory::initial_condition() const { return points.front().lambda_max / points.front().lambda_min; }
double Trajectory::final_condition() const { return points.back().lambda_max / points.back().lambda_min; }

Trajectory ml_trajectory(const density::Model& model, const density::Prior& prior, const Vector& z0,
                         const TrajectoryConfig& cfg, const linalg::Rng& rng) {
  if (z0.size() != model.input_dim()) throw std::invalid_argument("ml_trajectory: z0 has the wrong dimension");
  if (!prior.in_support(z0.span())) throw std::invalid_argument("ml_trajectory: z0 outside the prior's support");
  if (!(cfg.step_size > 0.0)) throw std::invalid_argument("ml_trajectory: step size must be positive");
  cfg.estimator.validate();

  Trajectory out;
  Vector z = z0;
  for (std::size_t k = 0; k <= cfg.steps; ++k) {
    TrajectoryPoint p;
    p.step = k;
    p.z = z;
    density::GradientResult g;
    try {
      g = density::spectral_grad_points(model, Matrix::column(z), prior, cfg.estimator, rng.split(k),
                                        cfg.likelihood);
    } catch (const spectral::DegenerateOperator& e) {
      out.truncated = true;
      out.reason = "step " + std::to_string(k) + ": " + e.what();
      break;
    }
    p.log_q_estimate = g.value;
    p.grad_norm = linalg::norm2(g.gradient.span());
    p.log_q_exact = p.lambda_min = p.lambda_max = kNaN;
    if (cfg.track_exact) {
      const linalg::SymmetricEigen eig = linalg::sym_eig(density::explicit_metric(model, z));
      p.lambda_max = eig.eigenvalues[0];
      p.lambda_min = eig.eigenvalues[eig.eigenvalues.size() - 1];
      try {
        p.log_q_exact = density::exact_log_likelihood(model, z, prior);
      } catch (const density::SingularJacobian&) {
      }
    }
    bool finite = std::isfinite(p.log_q_estimate);
    for (double v : g.gradient) finite = finite && std::isfinite(v);
    if (!finite) {
      out.truncated = true;
      out.reason = "step " + std::to_string(k) + ": non-finite likelihood estimate or gradient";
      break;
    }
    out.points.push_back(p);
    if (k == cfg.steps) break;
    z = z + cfg.step_size * g.gradient;
    if (!prior.in_support(z.span())) {
      out.truncated = true;
      out.reason = "step " + std::to_string(k + 1) + ": left the prior's support";
      break;
    }
  }
  if (out.points.empty()) throw std::runtime_error("ml_trajectory: " + out.reason);
  return out;
}

Spectrum metric_spectrum(const density::Model& model, const Vector& z) {
  linalg::SymmetricEigen eig = linalg::sym_eig(density::explicit_metric(model, z));
  return {std::move(eig.eigenvalues), std::move(eig.eigenvectors)};
}

std::string random_direction_name(RandomDirection d) {
  return d == RandomDirection::kGaussian ? "gaussian" : "unit-sphere";
}

RandomDirection parse_random_direction(const std::string& s) {
  if (s == "unit-sphere") return RandomDirection::kUnitSphere;
  if (s == "gaussian") return RandomDirection::kGaussian;
  throw std::invalid_argument("unknown random direction '" + s + "' (expected unit-sphere or gaussian)");
}

void PerturbationConfig::validate() const {
  if (!(alpha > 0.0)) throw std::invalid_argument("perturbation alpha must be positive");
  if (trials == 0) throw std::invalid_argument("perturbation trial count must be at least 1");
  if (mc_samples == 0) throw std::invalid_argument("perturbation Monte Carlo count must be at least 1");
}

DeltaRatios delta_ratios(const density::Model& model, const Vector& z, const Matrix& eigenvectors,
                         const PerturbationConfig& pcfg, linalg::Rng& rng) {
  pcfg.validate();
  const std::size_t n = model.input_dim();
  if (z.size() != n || eigenvectors.rows() != n) throw std::invalid_argument("delta_ratios: dimension mismatch");

  const Vector base = model.evaluate(z);
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t s = 0; s < pcfg.mc_samples; ++s) {
    const Vector eps = pcfg.direction == RandomDirection::kGaussian ? linalg::standard_normal(rng, n)
                                                                    : linalg::random_unit(rng, n);
    const double d = distance(model.evaluate(displaced(z, pcfg.alpha, eps)), base);
    sum += d;
    sum_sq += d * d;
  }
  const double count = static_cast<double>(pcfg.mc_samples);
  DeltaRatios out;
  out.delta0 = sum / count;
  const double var = pcfg.mc_samples > 1 ? std::max(0.0, (sum_sq - count * out.delta0 * out.delta0) / (count - 1))
                                         : 0.0;
  out.delta0_stderr = std::sqrt(var / count);
  if (!(out.delta0 > 0.0)) throw DegenerateGenerator("delta(j, 0) is zero: the generator is locally constant");

  out.ratios = Vector(eigenvectors.cols());
  for (std::size_t i = 0; i < eigenvectors.cols(); ++i) {
    out.ratios[i] = distance(model.evaluate(displaced(z, pcfg.alpha, eigenvectors.col(i))), base) / out.delta0;
  }
  return out;
}

double v_eff(const std::vector<TrialReport>& trials, double tau) {
  if (trials.empty()) throw std::invalid_argument("v_eff needs at least one trial");
  std::size_t count = 0;
  for (const TrialReport& t : trials)
    for (double d : t.delta.ratios)
      if (d > tau) ++count;
  return static_cast<double>(count) / static_cast<double>(trials.size());
}

Matrix trial_points(const density::Prior& prior, std::size_t trials, const linalg::Rng& rng) {
  linalg::Rng r = rng.split(0);
  return prior.sample(r, trials);
}

SpectrumReport analyze_spectrum(const density::Model& model, const Matrix& trials, const PerturbationConfig& pcfg,
                                const linalg::Rng& rng) {
  pcfg.validate();
  SpectrumReport report;
  report.config = pcfg;
  for (std::size_t j = 0; j < trials.cols(); ++j) {
    TrialReport t;
    t.trial = j;
    t.z = trials.col(j);
    t.spectrum = metric_spectrum(model, t.z);
    linalg::Rng r = rng.split(1).split(j);
    t.delta = delta_ratios(model, t.z, t.spectrum.eigenvectors, pcfg, r);
    report.trials.push_back(std::move(t));
  }
  for (double tau : pcfg.taus) report.v_eff.push_back(v_eff(report.trials, tau));
  return report;
}

void write_spectrum_csv(const SpectrumReport& report, const std::filesystem::path& path) {
  using io::format_number;
  io::CsvWriter csv(path, {"trial", "index", "eigenvalue", "delta", "delta0", "delta0_stderr"});
  for (const TrialReport& t : report.trials) {
    for (std::size_t i = 0; i < t.delta.ratios.size(); ++i) {
      csv.row({format_number(t.trial), format_number(i), format_number(t.spectrum.eigenvalues[i]),
               format_number(t.delta.ratios[i]), format_number(t.delta.delta0),
               format_number(t.delta.delta0_stderr)});
    }
  }
}

Sweep perturbation_sweep(const density::Model& model, const Matrix& trials, const PerturbationConfig& pcfg,
                         const linalg::Rng& rng) {
  // alpha = 0 is allowed here: every row collapses onto the base output
  if (!(pcfg.alpha >= 0.0)) throw std::invalid_argument("perturbation alpha must be non-negative");
  if (model.direction() != density::Direction::kLatentToData) {
    throw std::invalid_argument("perturbation_sweep needs a z-to-x model");
  }
  const std::size_t n = model.input_dim();
  const std::size_t k = pcfg.top_k == 0 ? n : std::min(pcfg.top_k, n);
  Sweep out;
  for (std::size_t j = 0; j < trials.cols(); ++j) {
    const Vector z = trials.col(j);
    const Vector base = model.evaluate(z);
    out.points.push_back({j, "base", 0, base, 0.0});

    linalg::Rng r = rng.split(j);
    const Vector u = linalg::random_unit(r, n);
    const Vector yr = model.evaluate(displaced(z, pcfg.alpha, u));
    const double dr = distance(yr, base);
    out.points.push_back({j, "random", 0, yr, dr});
    out.mean_random_displacement += dr;

    const Spectrum s = metric_spectrum(model, z);
    for (std::size_t i = 0; i < k; ++i) {
      const Vector v = s.eigenvectors.col(i);
      const Vector yp = model.evaluate(displaced(z, pcfg.alpha, v));
      const Vector ym = model.evaluate(displaced(z, -pcfg.alpha, v));
      const double dp = distance(yp, base), dm = distance(ym, base);
      out.points.push_back({j, "eigen+", i, yp, dp});
      out.points.push_back({j, "eigen-", i, ym, dm});
      if (i == 0) out.mean_top_eigen_displacement += 0.5 * (dp + dm);
    }
  }
  const double m = static_cast<double>(std::max<std::size_t>(1, trials.cols()));
  out.mean_random_displacement /= m;
  out.mean_top_eigen_displacement /= m;
  return out;
}

void write_sweep_csv(const Sweep& sweep, const std::filesystem::path& path) {
  using io::format_number;
  const std::size_t dim = sweep.points.empty() ? 0 : sweep.points.front().output.size();
  std::vector<std::string> header = {"trial", "kind", "index", "displacement"};
  for (std::size_t d = 0; d < dim; ++d) header.push_back("y" + std::to_string(d));
  io::CsvWriter csv(path, header);
  for (const SweepPoint& p : sweep.points) {
    std::vector<std::string> row = {format_number(p.trial), p.kind, format_number(p.index),
                                    format_number(p.displacement)};
    for (double v : p.output) row.push_back(format_number(v));
    csv.row(row);
  }
}

void write_trajectory_csv(const Trajectory& t, const std::filesystem::path& path) {
  using io::format_number;
  const std::size_t dim = t.points.front().z.size();
  std::vector<std::string> header = {"step"};
  for (std::size_t d = 0; d < dim; ++d) header.push_back("z" + std::to_string(d));
  for (const char* c : {"log_q_estimate", "log_q_exact", "lambda_min", "lambda_max", "grad_norm"}) header.push_back(c);
  io::CsvWriter csv(path, header);
  for (const TrajectoryPoint& p : t.points) {
    std::vector<std::string> row = {format_number(p.step)};
    for (double v : p.z) row.push_back(format_number(v));
    for (double v : {p.log_q_estimate, p.log_q_exact, p.lambda_min, p.lambda_max, p.grad_norm}) {
      row.push_back(format_number(v));
    }
    csv.row(row);
  }
}

}  // namespace specprop::latent
