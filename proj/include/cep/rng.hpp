#pragma once

#include <cstdint>
#include <limits>

namespace cep {

// splitmix64: tiny counter-based generator (Steele, Lea, Flood 2014).
// Used instead of mt19937_64 because experiments key a fresh substream per
// (repetition, instance, role) tuple, and a one-word seed makes that free.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

// Derives independent, reproducible substreams from one master seed. The
// same (a, b, c) always yields the same stream for a given master seed, and
// distinct tuples yield decorrelated streams.
class RngFactory {
 public:
  explicit RngFactory(std::uint64_t master_seed) : master_(master_seed) {}

  std::uint64_t master_seed() const { return master_; }

  SplitMix64 stream(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) const {
    std::uint64_t s = mix(master_ ^ 0x6a09e667f3bcc909ULL);
    s = mix(s ^ mix(a + 0xbb67ae8584caa73bULL));
    s = mix(s ^ mix(b + 0x3c6ef372fe94f82bULL));
    s = mix(s ^ mix(c + 0xa54ff53a5f1d36f1ULL));
    return SplitMix64(s);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t master_;
};

}  // namespace cep
