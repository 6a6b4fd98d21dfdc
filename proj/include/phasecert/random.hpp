#pragma once

// Reproducible random numbers. The engine is std::mt19937_64, whose output
// sequence is fixed by the C++ standard; uniforms take the top 53 bits and
// normals use the Box-Muller transform, so a seed yields the same stream on
// every conforming platform with the same libm.

#include <cstdint>
#include <random>

namespace phasecert {

/// SplitMix64 finalizer; decorrelates (seed, stream) pairs into engine seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) : engine_(mix_seed(seed, stream)) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform();
  /// Standard normal.
  double normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace phasecert
