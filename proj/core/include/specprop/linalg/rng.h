#pragma once

#include <cstdint>
#include <limits>

#include "specprop/linalg/matrix.h"

namespace specprop::linalg {

// Splittable pseudo-random stream identified by (seed, stream-id).
//
// The output sequence is a pure function of the pair. split(k) derives a
// child stream from the identity, not from the current position, so
// children can be drawn in any order (or concurrently) with identical
// results. The generator is SplitMix64, which also satisfies the standard
// UniformRandomBitGenerator requirements.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0, std::uint64_t stream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  Rng split(std::uint64_t k) const;

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  // Uniform on [0, 1).
  double uniform();
  double normal();

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Entries drawn uniformly from {-1, +1}.
Vector rademacher(Rng& rng, std::size_t n);
Vector standard_normal(Rng& rng, std::size_t n);
// Uniformly distributed on the unit sphere in R^n.
Vector random_unit(Rng& rng, std::size_t n);

}  // namespace specprop::linalg
