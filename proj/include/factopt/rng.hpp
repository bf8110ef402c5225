#pragma once

#include <cstdint>

// Deterministic pseudo-random source used by the synthetic problems and the
// test oracles. The generator is SplitMix64 (constants below); uniform
// doubles take the top 53 bits; normal variates are a sum of 12 uniforms
// minus 6, which uses only exact IEEE additions and therefore reproduces
// bit-identically on any platform or language with 64-bit floats.

namespace factopt {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  // Derived stream for one training step, decorrelated from neighbors.
  // Step 0 is reserved for initialization draws.
  static Rng for_step(std::uint64_t seed, std::uint64_t step) {
    return Rng(mix(mix(seed) ^ (step * 0xD1B54A32D192ED03ull)));
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ull;
    return mix(state_);
  }

  // Uniform in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Approximately standard normal (Irwin-Hall with 12 terms).
  double next_normal() {
    double s = 0.0;
    for (int k = 0; k < 12; ++k) s += next_double();
    return s - 6.0;
  }

  // Uniform index in [0, n). Plain modulo; the bias is irrelevant for the
  // batch sizes used here and the scheme is trivial to reproduce elsewhere.
  std::uint64_t next_index(std::uint64_t n) { return next_u64() % n; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace factopt
