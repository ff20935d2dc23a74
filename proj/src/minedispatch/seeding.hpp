#ifndef MINEDISPATCH_SEEDING_HPP
#define MINEDISPATCH_SEEDING_HPP

#include <cstdint>
#include <initializer_list>

namespace minedispatch {

/// Folds several integers into one well-mixed 64-bit seed (splitmix64 steps).
inline std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x9E3779B97F4A7C15ULL;
  for (std::uint64_t p : parts) {
    h += p + 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = h;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    h = z ^ (z >> 31);
  }
  return h;
}

}  // namespace minedispatch

#endif  // MINEDISPATCH_SEEDING_HPP
