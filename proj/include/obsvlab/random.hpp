#pragma once

#include <cstdint>
#include <random>

namespace obsvlab {

// Seeded generator whose draws depend only on the seed, not on the standard
// library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : engine_() % n; }
  bool coin(double p = 0.5) { return uniform01() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace obsvlab
