#include "ketra/seeds.hpp"

namespace ketra {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t sub_seed(std::uint64_t seed, SeedStream stream, std::uint64_t index) {
  return splitmix64(splitmix64(seed ^ static_cast<std::uint64_t>(stream)) + index);
}

}  // namespace ketra
