#include "specprop/density/prior.h"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace specprop::density {

namespace {
const double kLog2Pi = std::log(2.0 * std::numbers::pi);
}

Prior::Prior(Kind kind, std::size_t dim, double half_width)
    : kind_(kind), dim_(dim), half_width_(half_width) {
  if (dim == 0) throw std::invalid_argument("Prior: dim must be positive");
  if (!(half_width > 0.0)) throw std::invalid_argument("Prior: half width must be positive");
}

Prior Prior::spherical_normal(std::size_t dim) { return Prior(Kind::kSphericalNormal, dim, 1.0); }

Prior Prior::uniform_box(std::size_t dim, double half_width) {
  return Prior(Kind::kUniformBox, dim, half_width);
}

bool Prior::in_support(std::span<const double> z) const {
  if (kind_ == Kind::kSphericalNormal) return true;
  for (double v : z)
    if (std::abs(v) > half_width_) return false;
  return true;
}

double Prior::log_density(std::span<const double> z) const {
  if (z.size() != dim_) throw linalg::DimensionError("Prior::log_density: wrong dimension");
  const double n = static_cast<double>(dim_);
  if (kind_ == Kind::kSphericalNormal) {
    double sq = 0.0;
    for (double v : z) sq += v * v;
    return -0.5 * sq - 0.5 * n * kLog2Pi;
  }
  if (!in_support(z)) return -std::numeric_limits<double>::infinity();
  return -n * std::log(2.0 * half_width_);
}

ad::Var Prior::log_density(ad::Var z) const {
  if (z.rows() != dim_) throw linalg::DimensionError("Prior::log_density: wrong dimension");
  const double n = static_cast<double>(dim_);
  if (kind_ == Kind::kSphericalNormal) {
    return ad::shift(ad::scale(ad::colwise_dot(z, z), -0.5), -0.5 * n * kLog2Pi);
  }
  linalg::Matrix values(1, z.cols());
  for (std::size_t c = 0; c < z.cols(); ++c) values(0, c) = log_density(z.value().col(c).span());
  return z.tape().constant(values);
}

linalg::Matrix Prior::sample(linalg::Rng& rng, std::size_t count) const {
  linalg::Matrix out(dim_, count);
  for (std::size_t c = 0; c < count; ++c) {
    for (std::size_t r = 0; r < dim_; ++r) {
      out(r, c) = kind_ == Kind::kSphericalNormal ? rng.normal()
                                                  : half_width_ * (2.0 * rng.uniform() - 1.0);
    }
  }
  return out;
}

std::string_view prior_name(Prior::Kind kind) {
  return kind == Prior::Kind::kSphericalNormal ? "spherical-normal" : "uniform-box";
}

}  // namespace specprop::density
