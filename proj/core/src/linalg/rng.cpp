#include "specprop/linalg/rng.h"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace specprop::linalg {
namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream), state_(mix64(seed + kGolden) ^ mix64(stream * kGolden + 1)) {}

Rng Rng::split(std::uint64_t k) const {
  return Rng(seed_, mix64(stream_ ^ mix64(k + 0x632be59bd9b4e019ULL)));
}

Rng::result_type Rng::operator()() {
  state_ += kGolden;
  return mix64(state_);
}

double Rng::uniform() {
  // 53 high-quality bits.
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  // Marsaglia polar method; the pair's second value is cached.
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * f;
  has_spare_ = true;
  return u * f;
}

Vector rademacher(Rng& rng, std::size_t n) {
  if (n == 0) throw std::invalid_argument("rademacher: n must be positive");
  Vector v(n);
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i % 64 == 0) bits = rng();
    v[i] = (bits & 1U) ? 1.0 : -1.0;
    bits >>= 1;
  }
  return v;
}

Vector standard_normal(Rng& rng, std::size_t n) {
  Vector v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

Vector random_unit(Rng& rng, std::size_t n) {
  Vector v = standard_normal(rng, n);
  const double len = norm2(v.span());
  return (1.0 / len) * v;
}

}  // namespace specprop::linalg
