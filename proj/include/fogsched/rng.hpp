#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <utility>

namespace fogsched {

// SplitMix64 (Steele, Lea, Flood 2014). Chosen because the full algorithm fits
// in a few lines and can be re-implemented bit-exactly in any language:
//
//   state += 0x9E3779B97F4A7C15
//   z = state
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
//
// Derived draws are also fixed here (the standard library distributions are
// implementation-defined and therefore not portable):
//   uniform01()          = (next() >> 11) * 2^-53                 in [0, 1)
//   uniform(lo, hi)      = lo + (hi - lo) * uniform01()
//   uniform_int(lo, hi)  = lo + x % span with span = hi - lo + 1, where x is
//                          the first next() below 2^64 - (2^64 % span)
//   bernoulli(p)         = uniform01() < p
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return next(); }

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Inclusive on both ends.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1ULL;
    if (span == 0) return static_cast<std::int64_t>(next());  // full 64-bit range
    // r = 2^64 mod span; accept x < 2^64 - r.
    const std::uint64_t r = (max() % span + 1) % span;
    std::uint64_t x = next();
    while (r != 0 && x > max() - r) x = next();
    return lo + static_cast<std::int64_t>(x % span);
  }

  bool bernoulli(double p) { return uniform01() < p; }

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

// Fisher-Yates with uniform_int, portable across standard libraries.
template <typename T>
void shuffle(std::span<T> items, SplitMix64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i - 1)));
    std::swap(items[i - 1], items[j]);
  }
}

// Derives an independent stream seed from a base seed and a stream index.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream) {
  SplitMix64 g(base ^ (stream * 0xD1B54A32D192ED03ULL));
  return g.next();
}

}  // namespace fogsched
