#pragma once

// Counter-based generator: the k-th draw of stream `key` is a pure function
// of (key, k). Uses the SplitMix64 finalizer (Steele, Lea & Flood 2014) as the
// bijective mixer, so streams can be indexed randomly and regenerated exactly.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace pathwise::rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Key of stream `index` derived from a user seed; distinct indices give
/// statistically independent streams.
constexpr std::uint64_t split(std::uint64_t seed, std::uint64_t index) noexcept {
  return mix64(mix64(seed + kGolden) ^ mix64(index * kGolden + 0x632BE59BD9B4E019ULL));
}

class CounterStream {
 public:
  explicit constexpr CounterStream(std::uint64_t key, std::uint64_t counter = 0) noexcept
      : key_(key), counter_(counter) {}

  constexpr std::uint64_t at(std::uint64_t k) const noexcept { return mix64(key_ + (k + 1) * kGolden); }

  constexpr std::uint64_t next_u64() noexcept { return at(counter_++); }

  /// Uniform on the open interval (0, 1) with 53 random bits.
  double next_uniform() noexcept {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal by Box-Muller; consumes two counters per pair and
  /// caches the second variate.
  double next_normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  constexpr std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace pathwise::rng
