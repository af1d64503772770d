#pragma once

#include <cstdint>

namespace ketra {

// Every random stream is derived from the single user seed:
//   sub_seed(seed, stream, index) = splitmix64(splitmix64(seed ^ stream) + index)
// so that adding a repeat or a new stream never shifts an existing one.
enum class SeedStream : std::uint64_t {
  init_factors = 0x1001,
  test_split = 0x2002,
  validation_split = 0x3003,
  negatives = 0x4004,
  subsample = 0x5005,
  weighted_split = 0x6006,
};

std::uint64_t splitmix64(std::uint64_t x);

std::uint64_t sub_seed(std::uint64_t seed, SeedStream stream, std::uint64_t index = 0);

}  // namespace ketra
