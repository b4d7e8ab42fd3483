#pragma once

// Seeded random streams.
//
// Every stream is a std::mt19937_64 engine. The raw 64-bit output sequence of
// that engine is fixed by the C++ standard, so it is identical on every
// conforming platform. The standard distributions are NOT portable, so all
// conversions to floating point and to bounded integers are done here:
//
//   key      = splitmix64(seed ^ fnv1a64(label))
//   engine   = std::mt19937_64(key)
//   uniform  = (next_u64() >> 11) * 2^-53          in [0, 1)
//
// Distinct labels under one seed give independent substreams, e.g. the sensor
// layout and the link-success draws of a run never share state.

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace frsicl {

constexpr std::uint64_t fnv1a64(std::string_view text) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class RngStream {
 public:
  RngStream() : RngStream(0, "default") {}
  RngStream(std::uint64_t seed, std::string_view label)
      : seed_(seed), label_(label), engine_(splitmix64(seed ^ fnv1a64(label))) {}

  std::uint64_t seed() const noexcept { return seed_; }
  const std::string& label() const noexcept { return label_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Rejection sampling keeps it unbiased.
  std::size_t uniform_index(std::size_t n) {
    if (n <= 1) return 0;
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return static_cast<std::size_t>(x % bound);
  }

  /// A new stream keyed by (this stream's seed, label/sublabel).
  RngStream substream(std::string_view sublabel) const {
    return RngStream(seed_, label_ + "/" + std::string(sublabel));
  }

  friend bool operator==(const RngStream& a, const RngStream& b) {
    return a.seed_ == b.seed_ && a.label_ == b.label_ && a.engine_ == b.engine_;
  }

 private:
  std::uint64_t seed_;
  std::string label_;
  std::mt19937_64 engine_;
};

}  // namespace frsicl
