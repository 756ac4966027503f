#pragma once

#include <cmath>
#include <cstdint>

namespace facnet {

/// Deterministic counter-based PRNG (SplitMix64). The state advances by a
/// fixed odd constant per draw and the output is a bijective mix of the
/// state, so equal seeds give bit-identical streams on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53-bit resolution.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi). Requires lo <= hi; returns lo when they coincide.
  double uniform(double lo, double hi) {
    double v = lo + next_double() * (hi - lo);
    if (v >= hi && lo < hi) v = std::nextafter(hi, lo);
    return v;
  }

  /// Uniform index in [0, n). n must be nonzero.
  std::uint64_t index(std::uint64_t n) { return next_u64() % n; }

  /// Standard normal via Box-Muller; the paired draw is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - next_double();  // (0, 1]
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t state_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace facnet
