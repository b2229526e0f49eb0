#pragma once

#include <cstdint>
#include <random>

namespace eqimpact {

// Engine used for every random draw; its output sequence is fixed by the
// standard, so seeded runs are reproducible across platforms.
using RandomStream = std::mt19937_64;

// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double uniform01(RandomStream& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

// True with probability p (p <= 0 never, p >= 1 always).
inline bool bernoulli(RandomStream& rng, double p) { return uniform01(rng) < p; }

// Independent stream for shard `index` of a run seeded with `seed`.
inline RandomStream derive_stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return RandomStream(seq);
}

}  // namespace eqimpact
