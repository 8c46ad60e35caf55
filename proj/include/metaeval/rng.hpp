#pragma once

#include <cstdint>

namespace metaeval::rng {

// splitmix64 finalizer: bijective on 64-bit values with full avalanche.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Domain tags keep unrelated sampling streams disjoint under one user seed.
enum Domain : std::uint64_t {
  kSignMatrix = 1,
  kMetricSwap = 2,
  kBootstrapSegments = 3,
  kBootstrapSeed = 4,
  kAblationSubset = 5,
  kNaivePair = 6,
  kSynthetic = 7,
};

// Stateless counter-based generator. Every draw is a pure function of
// (seed, domain, stream, counter), so results do not depend on evaluation
// order or thread count, and any single draw can be regenerated in isolation.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t domain, std::uint64_t stream_a = 0,
         std::uint64_t stream_b = 0)
      : key_(mix64(mix64(mix64(mix64(seed) ^ domain) ^ stream_a) ^ stream_b)) {}

  std::uint64_t bits(std::uint64_t counter) const { return mix64(key_ ^ counter); }

  bool coin(std::uint64_t counter) const { return (bits(counter) >> 63) != 0; }

  // Uniform in [0, n). Multiply-shift; bias is O(n / 2^64), irrelevant here.
  std::uint32_t index(std::uint64_t counter, std::uint32_t n) const {
    return static_cast<std::uint32_t>(
        (static_cast<unsigned __int128>(bits(counter)) * n) >> 64);
  }

  // Uniform in (0, 1): 53-bit draw offset by half a step, never exactly 0 or 1.
  double unit(std::uint64_t counter) const {
    return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1p-53;
  }

 private:
  std::uint64_t key_;
};

}  // namespace metaeval::rng
