#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "specprop/density/likelihood.h"
#include "specprop/spectral/estimators.h"
#include "specprop/training/adam.h"

namespace specprop::training {

enum class Objective { kReverseKl, kForwardKl };

std::string objective_name(Objective o);
Objective parse_objective(const std::string& s);

struct TrainingConfig {
  Objective objective = Objective::kReverseKl;
  std::string energy = "u1";
  std::uint64_t seed = 1;

  // model
  std::size_t hidden = 32;
  std::size_t blocks = 4;
  double slope = 0.01;
  double init_gain = 0.1;

  spectral::EstimatorConfig estimator;
  density::LikelihoodOptions likelihood{density::MetricMode::kAssembled, density::LogDetMethod::kChebyshev};

  AdamConfig optimizer;

  std::size_t batch_size = 64;
  std::size_t iterations_per_epoch = 5000;
  std::size_t epochs = 5;
  double rho = 0.0;
  // Exact-likelihood monitoring every k-th iteration (1 = every iteration).
  std::size_t monitor_every = 1;

  // artifacts
  std::size_t grid_resolution = 200;
  double grid_half_width = 4.0;
  std::size_t sample_count = 4096;
  std::size_t heldout_count = 1024;

  // Defaults that depend on the objective and energy: epsilon 0.1 for
  // reverse KL and 1e-2 for forward KL; rho 8e-2 for u3 and u4.
  static TrainingConfig defaults_for(Objective objective, const std::string& energy);

  // Throws std::invalid_argument describing every invalid field.
  void validate() const;
};

// Flat key = value text with [sections]; keys are documented in
// docs/formats.md. Values absent from the file keep their defaults for the
// file's objective and energy. Unknown keys are rejected.
using ConfigOverrides = std::map<std::string, std::string>;  // "section.key" -> value

TrainingConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});
// Applies defaults_for(objective, energy) and then the overrides.
TrainingConfig resolve_config(const ConfigOverrides& values);
// Canonical text form: every key, fixed order, shortest round-trip numbers.
std::string dump_config(const TrainingConfig& cfg);
// All "section.key" pairs of dump_config.
ConfigOverrides config_values(const TrainingConfig& cfg);

}  // namespace specprop::training
