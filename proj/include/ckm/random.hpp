#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>

#include "ckm/error.hpp"

namespace ckm {

// Seedable generator used everywhere randomness appears. The helpers below do
// their own conversions so that results do not depend on the standard
// library's distribution implementations.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) : seed_(seed), engine_(seed) {}

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  std::uint64_t seed() const noexcept { return seed_; }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform in [0, n). n must be positive.
  std::size_t uniform_index(std::size_t n) {
    // Rejection sampling on the top bits keeps the result unbiased.
    if (n == 0) throw InvalidArgument("uniform_index: empty range");
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = max() - (max() % bound + 1) % bound;
    std::uint64_t r;
    do {
      r = engine_();
    } while (r > limit);
    return static_cast<std::size_t>(r % bound);
  }

  bool bernoulli(double p) { return uniform01() < p; }

  // Standard normal by Box-Muller (one variate per call).
  double normal() {
    double u = uniform01();
    while (u <= 0.0) u = uniform01();
    const double v = uniform01();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(6.283185307179586 * v);
  }

  // Independent child stream; same (seed, stream_id) always yields the same child.
  Rng split(std::uint64_t stream_id) const { return Rng(mix(seed_ ^ mix(stream_id + 0x9E3779B97F4A7C15ULL))); }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    // splitmix64 finalizer
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace ckm
