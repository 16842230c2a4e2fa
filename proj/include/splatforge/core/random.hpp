#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <sstream>

#include "splatforge/core/check.hpp"

namespace splatforge {

// splitmix64-seeded xoshiro256++. Self-contained so streams are identical
// across standard libraries and platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) { reseed(seed); }

  void reseed(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& word : s_) {
      x += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      word = z ^ (z >> 31);
    }
    has_cached_normal_ = false;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi_inclusive) {
    SF_CHECK(hi_inclusive >= lo, "uniform_int: empty range");
    const std::uint64_t span = static_cast<std::uint64_t>(hi_inclusive - lo) + 1;
    return lo + static_cast<std::int64_t>(next_u64() % span);
  }

  // Box-Muller; one spare value cached.
  double normal() {
    if (has_cached_normal_) {
      has_cached_normal_ = false;
      return cached_normal_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    cached_normal_ = r * std::sin(theta);
    has_cached_normal_ = true;
    return r * std::cos(theta);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Child stream derived from this one; advances this stream by one draw.
  Rng fork() { return Rng(next_u64()); }

  std::string serialize() const {
    std::ostringstream os;
    os << s_[0] << ' ' << s_[1] << ' ' << s_[2] << ' ' << s_[3] << ' '
       << (has_cached_normal_ ? 1 : 0) << ' ' << cached_bits();
    return os.str();
  }

  static Rng deserialize(const std::string& text) {
    std::istringstream is(text);
    Rng r(0);
    int has = 0;
    std::uint64_t bits = 0;
    is >> r.s_[0] >> r.s_[1] >> r.s_[2] >> r.s_[3] >> has >> bits;
    SF_REQUIRE(!is.fail(), "Rng::deserialize: malformed state string");
    r.has_cached_normal_ = has != 0;
    double v;
    static_assert(sizeof(v) == sizeof(bits));
    __builtin_memcpy(&v, &bits, sizeof(v));
    r.cached_normal_ = v;
    return r;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t cached_bits() const {
    std::uint64_t bits;
    __builtin_memcpy(&bits, &cached_normal_, sizeof(bits));
    return bits;
  }

  std::uint64_t s_[4] = {};
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace splatforge
