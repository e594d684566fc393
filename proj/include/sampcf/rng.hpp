#pragma once

#include <cstdint>

namespace sampcf {

// Counter-based 64-bit generator: output i is a splitmix64-style hash of
// (seed, stream, i). Streams with distinct (seed, stream) pairs are
// independent, there is no shared state, and any draw can be reproduced
// from its index.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : base_(mix(mix(seed + 0x9E3779B97F4A7C15ULL) ^ mix(stream + 0xD1B54A32D192ED03ULL))) {}

  std::uint64_t next_u64() {
    counter_ += 0x9E3779B97F4A7C15ULL;
    return mix(base_ + counter_);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Unbiased uniform integer in [0, n). Lemire multiply-shift with rejection.
  std::uint64_t next_below(std::uint64_t n) {
    __uint128_t m = static_cast<__uint128_t>(next_u64()) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (lo < threshold) {
        m = static_cast<__uint128_t>(next_u64()) * n;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t base_;
  std::uint64_t counter_ = 0;
};

// Fixed stream ids so independent consumers never share a sequence.
namespace rng_stream {
constexpr std::uint64_t kModelInit = 1;
constexpr std::uint64_t kSampler = 2;
constexpr std::uint64_t kSplit = 3;
constexpr std::uint64_t kSynth = 4;
}  // namespace rng_stream

}  // namespace sampcf
