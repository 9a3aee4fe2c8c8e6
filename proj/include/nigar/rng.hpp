#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace nigar {

/// Seedable random source used by every sampler in the library.
///
/// Uniform doubles come from the top 53 bits of a mt19937_64 step, so the
/// stream is identical across platforms for a given seed. Standard normals
/// use the Marsaglia polar method (rejection on the unit disc) with the
/// spare deviate cached, which keeps the draw sequence deterministic.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform draw on the half-open interval [0, 1).
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  /// Standard normal draw (polar rejection, cached spare).
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  /// Child seed for replication `index`, independent of every other index.
  /// splitmix64 finalizer over master + (index+1) * golden-ratio increment.
  static std::uint64_t derive(std::uint64_t master, std::uint64_t index) {
    std::uint64_t z = master + (index + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace nigar
