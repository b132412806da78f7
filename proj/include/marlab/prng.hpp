#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <initializer_list>

namespace marlab {

/// Generator identifier recorded in the metadata of every artifact that
/// consumed random numbers. Bump the suffix if the stream ever changes.
inline constexpr const char* kPrngName = "splitmix64-polar/v1";

/// SplitMix64 finalizer: a 64-bit bijective mix.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Order-sensitive 64-bit hash of a short field list, used to derive stream
/// seeds. h starts from a constant xored with the field count; each field f
/// updates h = mix64((h ^ f) + 2^64/phi).
inline std::uint64_t hash64(std::initializer_list<std::uint64_t> fields) {
  std::uint64_t h =
      mix64(0x243f6a8885a308d3ULL ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(fields.size())));
  for (std::uint64_t f : fields) {
    h = mix64((h ^ f) + 0x9e3779b97f4a7c15ULL);
  }
  return h;
}

inline std::uint64_t double_bits(double x) {
  std::uint64_t b;
  std::memcpy(&b, &x, sizeof b);
  return b;
}

/// Deterministic 64-bit stream (SplitMix64, Steele et al. 2014) with uniform
/// and Gaussian draws. The Gaussian uses the Marsaglia polar method, whose
/// only libm dependencies are sqrt and log.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Standard normal draw. Draws are paired internally; the spare is cached.
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * next_unit() - 1.0;
      v = 2.0 * next_unit() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace marlab
