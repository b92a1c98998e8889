#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace arraynormal {

// Reproducible random stream keyed by (seed, stream id).
//
// Engine: xoshiro256++ (Blackman & Vigna). The 256-bit state is derived by
// running the SplitMix64 finalizer on seed ^ mix(stream), so any two
// distinct (seed, stream) pairs start decorrelated streams. Identical
// (seed, stream) pairs reproduce identical draw sequences bit-exactly.
// Distinct streams may be consumed on distinct threads; a single stream is
// strictly sequential.
//
// Satisfies UniformRandomBitGenerator, so it plugs into the <random>
// distributions.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream) {
    std::uint64_t x = seed ^ mix64(stream + 0x9e3779b97f4a7c15ULL);
    for (auto& word : state_) word = split_next(x);
    // xoshiro's one forbidden state
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[3] = 1;
  }

  std::uint64_t operator()() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  static constexpr std::uint64_t min() { return 0; }
  static constexpr std::uint64_t max() {
    return std::numeric_limits<std::uint64_t>::max();
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  // Derives an independent child stream; deterministic in (seed, stream, tag).
  RngStream substream(std::uint64_t tag) const {
    return RngStream(seed_, mix64(stream_ ^ (0xbf58476d1ce4e5b9ULL * (tag + 1))));
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  // SplitMix64 finalizer
  static std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  static std::uint64_t split_next(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    return mix64(x);
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::array<std::uint64_t, 4> state_;
};

}  // namespace arraynormal
