#pragma once

#include <cstdint>
#include <string_view>

namespace ltprune {

std::uint64_t splitmix64(std::uint64_t x);

// Named-stream splitter: every consumer of randomness derives its own seed
// from the run seed and a stable stream name, so adding a consumer never
// shifts another one's sequence.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index);

}  // namespace ltprune
