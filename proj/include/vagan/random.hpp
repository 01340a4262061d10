#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace vagan {

// All randomness in the library flows through this engine so that a run is
// reproducible from one seed.
using Rng = std::mt19937_64;

// 53-bit uniform draw in [0, 1).
double uniform01(Rng& rng);
double uniform(Rng& rng, double lo, double hi);
// Box-Muller without a cached spare, so the engine state alone determines
// the next draw.
double normal(Rng& rng, double mean, double stddev);
// Uniform integer in [lo, hi].
std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi);

// splitmix64-based derivation of independent stream seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0);

std::string save_rng(const Rng& rng);
void load_rng(Rng& rng, const std::string& state);

}  // namespace vagan
