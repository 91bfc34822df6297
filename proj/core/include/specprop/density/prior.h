#pragma once

#include <span>
#include <string_view>

#include "specprop/ad/tape.h"
#include "specprop/linalg/matrix.h"
#include "specprop/linalg/rng.h"

namespace specprop::density {

// P_Z: standard spherical normal, or uniform on [-w, w]^n.
class Prior {
 public:
  enum class Kind { kSphericalNormal, kUniformBox };

  static Prior spherical_normal(std::size_t dim);
  static Prior uniform_box(std::size_t dim, double half_width = 1.0);

  Kind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  double half_width() const { return half_width_; }

  // -infinity outside the support.
  double log_density(std::span<const double> z) const;
  // Per-column log density of z (dim x B) as a 1 x B node. For the uniform
  // box the node is constant in z.
  ad::Var log_density(ad::Var z) const;

  // dim x count block of independent draws.
  linalg::Matrix sample(linalg::Rng& rng, std::size_t count) const;
  bool in_support(std::span<const double> z) const;

 private:
  Prior(Kind kind, std::size_t dim, double half_width);

  Kind kind_;
  std::size_t dim_;
  double half_width_;
};

std::string_view prior_name(Prior::Kind kind);

}  // namespace specprop::density
