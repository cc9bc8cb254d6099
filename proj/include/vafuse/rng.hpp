#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace vafuse {

// FNV-1a 64-bit over (seed bytes || data). Used for stable fold assignment so
// that the fold of an instance depends only on (seed, id).
inline std::uint64_t stable_hash64(std::uint64_t seed, std::string_view data) {
  std::uint64_t h = 14695981039346656037ULL;
  const auto mix = [&h](unsigned char byte) {
    h ^= static_cast<std::uint64_t>(byte);
    h *= 1099511628211ULL;
  };
  for (int i = 0; i < 8; ++i) mix(static_cast<unsigned char>((seed >> (8 * i)) & 0xff));
  for (char c : data) mix(static_cast<unsigned char>(c));
  return h;
}

// SplitMix64: tiny deterministic generator with a portable output sequence.
// std::mt19937 is portable too, but the standard distributions are not; all
// production sampling goes through the explicit helpers below instead.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform integer in [0, bound) by rejection; bound must be > 0.
  std::uint64_t next_below(std::uint64_t bound) {
    const std::uint64_t threshold = (0ULL - bound) % bound;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

  // Uniform double in [0, 1).
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

// First k entries of a seeded Fisher-Yates shuffle of 0..n-1.
inline std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k,
                                                           std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  SplitMix64 rng(seed);
  const std::size_t take = k < n ? k : n;
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.next_below(n - i));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(take);
  return idx;
}

}  // namespace vafuse
