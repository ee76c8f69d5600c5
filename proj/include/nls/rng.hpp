#pragma once

#include <cstdint>

namespace nls {

// Deterministic RNG with a fixed cross-platform bit stream, so seeded
// experiments reproduce byte-identical outputs everywhere. splitmix64
// core, Box-Muller for gaussians.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();

  // uniform in [0, 1)
  double uniform();

  // standard normal
  double gaussian();

  // derive an independent stream (for per-stage seeding)
  Rng fork(std::uint64_t salt);

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace nls
