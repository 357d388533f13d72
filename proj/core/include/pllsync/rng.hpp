#pragma once

#include <cstdint>

namespace pllsync::rng {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Counter-based stream: (seed, stream id) fully determines the sequence,
/// so fan-out over sample indices gives identical draws in serial and
/// parallel runs.
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t stream_id) {
    state_ = seed;
    (void)splitmix64(state_);
    state_ ^= 0xD1B54A32D192ED03ULL * (stream_id + 1);
    (void)splitmix64(state_);
  }

  std::uint64_t next_u64() { return splitmix64(state_); }

  /// Uniform draw in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform draw in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

 private:
  std::uint64_t state_;
};

}  // namespace pllsync::rng
