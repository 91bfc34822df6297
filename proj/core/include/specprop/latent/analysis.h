#pragma once

#include <filesystem>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "specprop/density/likelihood.h"
#include "specprop/density/model.h"
#include "specprop/density/prior.h"
#include "specprop/linalg/rng.h"
#include "specprop/spectral/estimators.h"

namespace specprop::latent {

using linalg::Matrix;
using linalg::Vector;

// The generator is constant around a trial point, so delta ratios have no
// denominator.
class DegenerateGenerator : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// G(z) = U diag(s) V^T z with U (output_dim x n) and V (n x n) Haar-random
// orthonormal, n = s.size(). output_dim = 0 means n.
std::unique_ptr<density::LinearModel> synthetic_linear_generator(std::span<const double> singular_values,
                                                                 std::size_t output_dim, linalg::Rng& rng);

// ---- maximum-likelihood trajectories --------------------------------------

struct TrajectoryConfig {
  std::size_t steps = 1000;
  double step_size = 1e-2;
  spectral::EstimatorConfig estimator = default_estimator();
  density::LikelihoodOptions likelihood{density::MetricMode::kAssembled, density::LogDetMethod::kChebyshev};
  // Also evaluate the exact ln Q and the metric's extreme eigenvalues at
  // every step (dense; fine for small latent spaces).
  bool track_exact = true;

  // (m, p, t, g, eps) = (5, 20, 20, 1.1, 1e-4)
  static spectral::EstimatorConfig default_estimator();
};

struct TrajectoryPoint {
  std::size_t step = 0;
  Vector z;
  double log_q_estimate = 0.0;
  double log_q_exact = 0.0;  // NaN when not tracked
  double lambda_min = 0.0;   // NaN when not tracked
  double lambda_max = 0.0;
  double grad_norm = 0.0;
};

struct Trajectory {
  std::vector<TrajectoryPoint> points;  // points[0] is z0
  bool truncated = false;
  std::string reason;

  // ln(p_final / p_init) from the estimates, and from the exact values when
  // tracked.
  double log_ratio_estimate() const;
  double log_ratio_exact() const;
  double initial_condition() const;  // lambda_max / lambda_min at z0
  double final_condition() const;
};

// Fixed-step gradient ascent on the seeded estimate of ln Q at z. Step k
// uses rng.split(k). A non-finite value or gradient ends the trajectory
// early with truncated = true.
Trajectory ml_trajectory(const density::Model& model, const density::Prior& prior, const Vector& z0,
                         const TrajectoryConfig& cfg, const linalg::Rng& rng);

// ---- metric spectrum and perturbations ------------------------------------

struct Spectrum {
  Vector eigenvalues;   // descending
  Matrix eigenvectors;  // columns, largest-magnitude component positive
};

Spectrum metric_spectrum(const density::Model& model, const Vector& z);

enum class RandomDirection {
  kUnitSphere,  // eps uniform on the unit sphere: same length as an eigenvector step
  kGaussian,    // eps ~ N(0, I)
};

std::string random_direction_name(RandomDirection d);
RandomDirection parse_random_direction(const std::string& s);

struct PerturbationConfig {
  double alpha = 0.4;
  std::size_t trials = 12;
  std::vector<double> taus = {0.25, 0.5, 1.0, 2.0};
  std::size_t mc_samples = 256;
  RandomDirection direction = RandomDirection::kUnitSphere;
  // Eigenvectors perturbed in a sweep; 0 means all.
  std::size_t top_k = 0;

  void validate() const;
};

struct DeltaRatios {
  double delta0 = 0.0;
  double delta0_stderr = 0.0;
  Vector ratios;  // delta(j, i), i over the eigenvector columns
};

// delta(j, 0) = E ||G(z + alpha eps) - G(z)|| by Monte Carlo, and
// delta(j, i) = ||G(z + alpha v_i) - G(z)|| / delta(j, 0).
DeltaRatios delta_ratios(const density::Model& model, const Vector& z, const Matrix& eigenvectors,
                         const PerturbationConfig& pcfg, linalg::Rng& rng);

struct TrialReport {
  std::size_t trial = 0;
  Vector z;
  Spectrum spectrum;
  DeltaRatios delta;
};

struct SpectrumReport {
  PerturbationConfig config;
  std::vector<TrialReport> trials;
  std::vector<double> v_eff;  // one per config.taus
};

// (1/M) sum_j sum_i 1{delta(j, i) > tau}.
double v_eff(const std::vector<TrialReport>& trials, double tau);

// Trial points z_j come from the prior via rng.split(0); trial j's Monte
// Carlo draws use rng.split(1).split(j).
Matrix trial_points(const density::Prior& prior, std::size_t trials, const linalg::Rng& rng);
SpectrumReport analyze_spectrum(const density::Model& model, const Matrix& trials, const PerturbationConfig& pcfg,
                                const linalg::Rng& rng);

// One row per (trial, eigen-index): trial, index, eigenvalue, delta,
// delta0, delta0_stderr.
void write_spectrum_csv(const SpectrumReport& report, const std::filesystem::path& path);

struct SweepPoint {
  std::size_t trial = 0;
  std::string kind;   // base, random, eigen+, eigen-
  std::size_t index = 0;  // eigen-index for eigen rows, 0 otherwise
  Vector output;
  double displacement = 0.0;  // ||output - base||
};

struct Sweep {
  std::vector<SweepPoint> points;
  // Averages over trials of ||G(z + alpha u) - G(z)|| for the random unit
  // direction, and of the mean of the +/- displacements along v_1.
  double mean_random_displacement = 0.0;
  double mean_top_eigen_displacement = 0.0;
};

// For each trial: G(z_j), G(z_j + alpha u) with u a random unit vector from
// rng.split(j), and G(z_j +/- alpha v_i) for the top-k eigenvectors.
Sweep perturbation_sweep(const density::Model& model, const Matrix& trials, const PerturbationConfig& pcfg,
                         const linalg::Rng& rng);

// trial, kind, index, displacement, y0, y1, ...
void write_sweep_csv(const Sweep& sweep, const std::filesystem::path& path);
// step, z0.., log_q_estimate, log_q_exact, lambda_min, lambda_max, grad_norm
void write_trajectory_csv(const Trajectory& t, const std::filesystem::path& path);

}  // namespace specprop::latent
