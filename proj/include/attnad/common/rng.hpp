#pragma once

#include <cstdint>
#include <random>

namespace attnad {

/// Derive an independent sub-seed from (seed, stream). SplitMix64 finalizer;
/// every seeded component of the project goes through this so that seed
/// schedules are stable across platforms.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Thin wrapper around mt19937_64 with platform-independent sampling.
/// The standard <random> distributions are implementation-defined, so the
/// conversions from raw engine output are done here explicitly.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();

  /// Uniform double in [lo, hi]. Returns lo exactly when lo == hi.
  double uniform(double lo, double hi);

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);

  /// Uniform integer in [lo, hi].
  std::int64_t between(std::int64_t lo, std::int64_t hi);

  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace attnad
