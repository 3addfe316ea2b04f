#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace scatlab {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based stream keyed by (seed, sample index). Draws depend only on the
/// key and the draw count, never on which worker evaluates the sample.
class SampleStream {
 public:
  SampleStream(std::uint64_t seed, std::uint64_t index)
      : key_(splitmix64(splitmix64(seed) ^ (index * 0xd1342543de82ef95ULL + 0x632be59bd9b4e019ULL))) {}

  std::uint64_t next_u64() { return splitmix64(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace scatlab
