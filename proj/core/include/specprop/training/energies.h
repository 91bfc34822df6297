#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "specprop/ad/tape.h"
#include "specprop/linalg/matrix.h"
#include "specprop/linalg/rng.h"

namespace specprop::training {

using ad::Var;
using linalg::Matrix;

enum class EnergyId { kU1, kU2, kU3, kU4, kCrescent, kRingMixture };

// A target density on R^2, p(x) proportional to exp(log_density(x)).
// U1..U4 are the classic wave/ring potentials (log density = -U); the
// crescent and ring mixture are normalized and can be sampled.
class Energy {
 public:
  explicit Energy(EnergyId id) : id_(id) {}
  static Energy from_name(std::string_view name);
  static std::vector<EnergyId> all();

  EnergyId id() const { return id_; }
  std::string name() const;
  bool has_sampler() const { return id_ == EnergyId::kCrescent || id_ == EnergyId::kRingMixture; }
  bool normalized() const { return has_sampler(); }

  double log_density(double x1, double x2) const;
  // Per-column log density of a 2 x B block as a 1 x B node.
  Var log_density(Var x) const;

  // 2 x count block. Throws std::logic_error when there is no sampler.
  Matrix sample(linalg::Rng& rng, std::size_t count) const;

  // Ring mixture component centers (8 points on the radius-2.5 circle).
  static std::vector<std::pair<double, double>> ring_centers();

 private:
  EnergyId id_;
};

inline constexpr double kRingRadius = 2.5;
inline constexpr double kRingSigma = 0.2;
inline constexpr int kRingModes = 8;

}  // namespace specprop::training
