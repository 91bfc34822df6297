#include "specprop/training/energies.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>

namespace specprop::training {

namespace {

constexpr double kPi = std::numbers::pi;
const double kLog2Pi = std::log(2.0 * kPi);

double lse(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

// log-sum-exp over 1 x B rows, stabilized by a constant per-column max.
Var lse(const std::vector<Var>& terms) {
  const std::size_t cols = terms[0].cols();
  Matrix m(1, cols, -std::numeric_limits<double>::infinity());
  for (const Var& t : terms)
    for (std::size_t c = 0; c < cols; ++c) m(0, c) = std::max(m(0, c), t.value()(0, c));
  Var shift = terms[0].tape().constant(m);
  Var acc;
  for (const Var& t : terms) {
    Var e = ad::exp(ad::sub(t, shift));
    acc = acc.valid() ? ad::add(acc, e) : e;
  }
  return ad::add(ad::log(acc), shift);
}

// -1/2 ((t - center) / width)^2
Var half_gauss(Var t, double center, double width) {
  return ad::scale(ad::square(ad::shift(t, -center)), -0.5 / (width * width));
}

Var sigmoid(Var t) { return ad::reciprocal(ad::shift(ad::exp(ad::neg(t)), 1.0)); }

}  // namespace

Energy Energy::from_name(std::string_view name) {
  if (name == "u1") return Energy(EnergyId::kU1);
  if (name == "u2") return Energy(EnergyId::kU2);
  if (name == "u3") return Energy(EnergyId::kU3);
  if (name == "u4") return Energy(EnergyId::kU4);
  if (name == "crescent") return Energy(EnergyId::kCrescent);
  if (name == "ring-mixture") return Energy(EnergyId::kRingMixture);
  throw std::invalid_argument("unknown energy '" + std::string(name) +
                              "' (expected u1, u2, u3, u4, crescent or ring-mixture)");
}

std::vector<EnergyId> Energy::all() {
  return {EnergyId::kU1, EnergyId::kU2, EnergyId::kU3, EnergyId::kU4, EnergyId::kCrescent,
          EnergyId::kRingMixture};
}

std::string Energy::name() const {
  switch (id_) {
    case EnergyId::kU1: return "u1";
    case EnergyId::kU2: return "u2";
    case EnergyId::kU3: return "u3";
    case EnergyId::kU4: return "u4";
    case EnergyId::kCrescent: return "crescent";
    case EnergyId::kRingMixture: return "ring-mixture";
  }
  return "unknown";
}

std::vector<std::pair<double, double>> Energy::ring_centers() {
  std::vector<std::pair<double, double>> c;
  for (int k = 0; k < kRingModes; ++k) {
    const double a = 2.0 * kPi * k / kRingModes;
    c.emplace_back(kRingRadius * std::cos(a), kRingRadius * std::sin(a));
  }
  return c;
}

double Energy::log_density(double x1, double x2) const {
  const double w1 = std::sin(2.0 * kPi * x1 / 4.0);
  switch (id_) {
    case EnergyId::kU1: {
      const double r = std::sqrt(x1 * x1 + x2 * x2);
      const double a = -0.5 * std::pow((x1 - 2.0) / 0.6, 2);
      const double b = -0.5 * std::pow((x1 + 2.0) / 0.6, 2);
      const double ab[2] = {a, b};
      return -0.5 * std::pow((r - 2.0) / 0.4, 2) + lse(ab);
    }
    case EnergyId::kU2:
      return -0.5 * std::pow((x2 - w1) / 0.4, 2);
    case EnergyId::kU3: {
      const double w2 = 3.0 * std::exp(-0.5 * std::pow((x1 - 1.0) / 0.6, 2));
      const double ab[2] = {-0.5 * std::pow((x2 - w1) / 0.35, 2), -0.5 * std::pow((x2 - w1 + w2) / 0.35, 2)};
      return lse(ab);
    }
    case EnergyId::kU4: {
      const double w3 = 3.0 * sigmoid((x1 - 1.0) / 0.3);
      const double ab[2] = {-0.5 * std::pow((x2 - w1) / 0.4, 2), -0.5 * std::pow((x2 - w1 + w3) / 0.35, 2)};
      return lse(ab);
    }
    case EnergyId::kCrescent: {
      const double r = (x2 - 0.5 * x1 * x1) / 0.5;
      return -0.5 * x1 * x1 - 0.5 * r * r - std::log(0.5) - kLog2Pi;
    }
    case EnergyId::kRingMixture: {
      double terms[kRingModes];
      const auto centers = ring_centers();
      for (int k = 0; k < kRingModes; ++k) {
        const double d1 = x1 - centers[k].first, d2 = x2 - centers[k].second;
        terms[k] = -(d1 * d1 + d2 * d2) / (2.0 * kRingSigma * kRingSigma);
      }
      return lse(terms) - std::log(static_cast<double>(kRingModes)) - std::log(2.0 * kPi * kRingSigma * kRingSigma);
    }
  }
  return 0.0;
}

Var Energy::log_density(Var x) const {
  if (x.rows() != 2) throw linalg::DimensionError("Energy::log_density: expected a 2 x B block");
  Var x1 = ad::slice_rows(x, 0, 1);
  Var x2 = ad::slice_rows(x, 1, 1);
  Var w1 = ad::sin(ad::scale(x1, 2.0 * kPi / 4.0));
  switch (id_) {
    case EnergyId::kU1: {
      Var r = ad::sqrt(ad::colwise_dot(x, x));
      return ad::add(half_gauss(r, 2.0, 0.4), lse({half_gauss(x1, 2.0, 0.6), half_gauss(x1, -2.0, 0.6)}));
    }
    case EnergyId::kU2:
      return half_gauss(ad::sub(x2, w1), 0.0, 0.4);
    case EnergyId::kU3: {
      Var w2 = ad::scale(ad::exp(half_gauss(x1, 1.0, 0.6)), 3.0);
      Var d = ad::sub(x2, w1);
      return lse({half_gauss(d, 0.0, 0.35), half_gauss(ad::add(d, w2), 0.0, 0.35)});
    }
    case EnergyId::kU4: {
      Var w3 = ad::scale(sigmoid(ad::scale(ad::shift(x1, -1.0), 1.0 / 0.3)), 3.0);
      Var d = ad::sub(x2, w1);
      return lse({half_gauss(d, 0.0, 0.4), half_gauss(ad::add(d, w3), 0.0, 0.35)});
    }
    case EnergyId::kCrescent: {
      Var r = ad::sub(x2, ad::scale(ad::square(x1), 0.5));
      return ad::shift(ad::add(half_gauss(x1, 0.0, 1.0), half_gauss(r, 0.0, 0.5)), -std::log(0.5) - kLog2Pi);
    }
    case EnergyId::kRingMixture: {
      std::vector<Var> terms;
      for (const auto& [c1, c2] : ring_centers()) {
        terms.push_back(ad::add(half_gauss(x1, c1, kRingSigma), half_gauss(x2, c2, kRingSigma)));
      }
      return ad::shift(lse(terms), -std::log(static_cast<double>(kRingModes)) -
                                       std::log(2.0 * kPi * kRingSigma * kRingSigma));
    }
  }
  throw std::logic_error("Energy::log_density: unhandled energy");
}

Matrix Energy::sample(linalg::Rng& rng, std::size_t count) const {
  Matrix out(2, count);
  if (id_ == EnergyId::kCrescent) {
    for (std::size_t c = 0; c < count; ++c) {
      const double x1 = rng.normal();
      out(0, c) = x1;
      out(1, c) = 0.5 * x1 * x1 + 0.5 * rng.normal();
    }
    return out;
  }
  if (id_ == EnergyId::kRingMixture) {
    const auto centers = ring_centers();
    for (std::size_t c = 0; c < count; ++c) {
      const auto k = static_cast<std::size_t>(rng() % kRingModes);
      out(0, c) = centers[k].first + kRingSigma * rng.normal();
      out(1, c) = centers[k].second + kRingSigma * rng.normal();
    }
    return out;
  }
  throw std::logic_error("energy '" + name() + "' has no sampler");
}

}  // namespace specprop::training
