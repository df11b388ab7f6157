#pragma once

#include <cstdint>

namespace chmix {

// SplitMix64 finalizer. Used as a counter-based generator: the value for
// (key, counter) is a pure function of its inputs, so a flow's random phase
// on switch interval j can be produced without replaying intervals 0..j-1.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t counter_hash(std::uint64_t key, std::uint64_t counter) {
  return mix64(mix64(key) ^ (counter * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL));
}

/// Uniform double in [0, 1) built from the top 53 bits; bit-identical on
/// every platform (unlike std::uniform_real_distribution).
constexpr double to_unit_interval(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

constexpr double counter_uniform(std::uint64_t key, std::uint64_t counter) {
  return to_unit_interval(counter_hash(key, counter));
}

/// Sequential stream over the same hash; portable replacement for
/// std::mt19937_64 + distribution when bit reproducibility matters.
class CounterStream {
 public:
  explicit CounterStream(std::uint64_t key) : key_(key) {}
  double uniform() { return counter_uniform(key_, next_++); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t bits() { return counter_hash(key_, next_++); }

 private:
  std::uint64_t key_;
  std::uint64_t next_ = 0;
};

}  // namespace chmix
