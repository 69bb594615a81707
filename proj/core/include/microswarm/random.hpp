#pragma once

#include <cstdint>

namespace microswarm {

/// Small deterministic generator (splitmix64). Draws are identical on
/// every platform and standard library, which keeps seeded experiments
/// byte-reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform double in [a, b).
  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  /// Uniform integer in [lo, hi] inclusive.
  int uniform_int(int lo, int hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next() % span);
  }

  /// Independent stream for a sub-task.
  Rng fork(std::uint64_t salt) {
    return Rng(next() ^ (salt * 0xD1342543DE82EF95ULL));
  }

 private:
  std::uint64_t state_;
};

}  // namespace microswarm
