#pragma once

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "specprop/density/model.h"
#include "specprop/density/prior.h"
#include "specprop/training/config.h"
#include "specprop/training/energies.h"

namespace specprop::training {

// |relative error| below this counts as inside the monitoring envelope.
inline constexpr double kReverseKlEnvelope = 0.30;
inline constexpr double kForwardKlEnvelope = 0.05;

struct IterationMetrics {
  std::size_t iteration = 0;  // 1-based, global
  std::size_t epoch = 0;      // 1-based
  double loss = 0.0;
  double logdet_estimate = 0.0;  // batch mean
  double logdet_exact = 0.0;     // batch mean; NaN when not monitored
  double relative_error = 0.0;   // batch mean of ln l_hat - ln l
  double abs_relative_error = 0.0;
  double lambda_max = 0.0;  // batch mean power-method estimate
  double penalty = 0.0;
  std::size_t bound_violations = 0;
  double grad_norm = 0.0;
};

struct EpochSummary {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double mean_relative_error = 0.0;
  double mean_abs_relative_error = 0.0;
  // Fraction of monitored iterations with |relative error| inside the
  // objective's envelope.
  double within_envelope = 0.0;
  double heldout_nll = 0.0;  // forward KL only, NaN otherwise
  double sample_mean_norm = 0.0;
  double mean_penalty = 0.0;
  double mean_lambda_max = 0.0;
};

struct TrainingResult {
  std::unique_ptr<density::Model> model;
  std::vector<EpochSummary> epochs;
  std::vector<IterationMetrics> iterations;
  double initial_heldout_nll = 0.0;  // forward KL only
  bool aborted = false;
  std::string abort_reason;
  std::vector<std::filesystem::path> artifacts;
};

using ProgressFn = std::function<void(const IterationMetrics&)>;

// Fresh residual flow for the config, initialized from the run seed.
std::unique_ptr<density::Model> make_flow(const TrainingConfig& cfg);
density::Prior make_prior(const TrainingConfig& cfg);

// Runs the full loop. When out_dir is non-empty, writes metrics.csv,
// epochs.csv, config.ini, and per epoch a checkpoint, a grid CSV and a
// sample CSV. A non-finite loss or gradient stops training with
// aborted = true; files from completed epochs are kept.
TrainingResult train(const TrainingConfig& cfg, const std::filesystem::path& out_dir = {},
                     const ProgressFn& progress = {});

// Cell-centred grid over [-w, w]^2, row-major in y then x; 2 x R^2.
Matrix grid_points(std::size_t resolution, double half_width);

// Values written to the grid CSV: exact ln Q for X->Z models, the target's
// log density for Z->X models.
std::vector<double> grid_values(const density::Model& model, const density::Prior& prior, const Energy& energy,
                                const Matrix& grid);

// Draws from Q. Z->X: f(z) with z from the prior. X->Z: categorical draw
// from exact ln Q over the grid cells plus uniform jitter within the cell.
Matrix sample_model(const density::Model& model, const density::Prior& prior, linalg::Rng& rng,
                    std::size_t count, std::size_t resolution, double half_width);

// -mean exact ln Q over the columns of x; NaN if any point is singular.
double heldout_nll(const density::Model& model, const density::Prior& prior, const Matrix& x);

}  // namespace specprop::training
