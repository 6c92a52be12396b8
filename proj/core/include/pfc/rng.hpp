#pragma once

#include <cstdint>

namespace pfc {

/// Counter-based SplitMix64 stream.
///
/// The k-th draw (k = 0, 1, ...) of stream `seed` is
///   z = seed + (k + 1) * 0x9E3779B97F4A7C15   (mod 2^64)
///   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
///   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
///   z =  z ^ (z >> 31)
/// so any draw can be reproduced from (seed, k) alone on every platform.
/// uniform() maps the top 53 bits to the open interval (0, 1).
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : seed_(seed) {}

  static constexpr std::uint64_t at(std::uint64_t seed, std::uint64_t k) {
    std::uint64_t z = seed + (k + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  static constexpr double to_open_unit(std::uint64_t bits) {
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  std::uint64_t next() { return at(seed_, counter_++); }
  /// U(0, 1), never exactly 0 or 1.
  double uniform() { return to_open_unit(next()); }
  /// U(-1, 1).
  double symmetric() { return 2.0 * uniform() - 1.0; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::uint64_t counter() const { return counter_; }

  /// Seed of an independent sub-stream, e.g. one per patch or per ladder rung.
  static constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    return at(seed ^ 0xD1B54A32D192ED03ULL, stream);
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace pfc
