#ifndef HOM_RANDOM_HPP
#define HOM_RANDOM_HPP

#include <cstdint>
#include <random>

namespace hom {

using Rng = std::mt19937_64;

/// Independent sub-streams of one run seed, one per pipeline stage.
enum class RngStream : std::uint64_t {
  emitter = 1,
  routing = 2,
  labels = 3,
  detector = 4,
  fit = 5,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline Rng make_rng(std::uint64_t seed, RngStream stream) {
  const std::uint64_t a = splitmix64(seed);
  const std::uint64_t b = splitmix64(a ^ (static_cast<std::uint64_t>(stream) * 0xD1B54A32D192ED03ull));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return Rng(seq);
}

}  // namespace hom

#endif  // HOM_RANDOM_HPP
