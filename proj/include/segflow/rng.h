#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace segflow {

using Rng = std::mt19937_64;

// Per-component seed derivation from the single root seed:
//   seed = splitmix64(root XOR fnv1a64(component)).
// Every stochastic component names itself ("train.batches", "sample.noise",
// ...) so reruns of one stage do not shift the streams of another.
std::uint64_t DeriveSeed(std::uint64_t root, std::string_view component);

std::uint64_t Fnv1a64(std::string_view bytes);
std::uint64_t SplitMix64(std::uint64_t x);

}  // namespace segflow

namespace segflow {

// Platform-independent draws (the std distributions are
// implementation-defined, which would break byte-level reproducibility).
double Uniform01(Rng& rng);
double StandardNormal(Rng& rng);
// Uniform integer in [0, n).
std::uint64_t UniformIndex(Rng& rng, std::uint64_t n);

}  // namespace segflow
