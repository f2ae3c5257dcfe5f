#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace nbv {

/// Seeded generator with distribution code written out explicitly so that
/// sequences do not depend on the standard library's distribution classes.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
  std::uint64_t index(std::uint64_t n);

  /// Standard normal via Box-Muller.
  double normal();

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

/// Derives an independent seed for a labeled consumer of the master seed,
/// e.g. derive_seed(seed, "train", 2). Stable across runs and platforms.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t index = 0);

}  // namespace nbv
