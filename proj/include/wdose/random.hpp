#pragma once

#include <cstdint>
#include <random>

namespace wdose {

using Rng = std::mt19937_64;

// Purpose tags keep streams derived from the same seed independent.
enum class StreamTag : std::uint64_t {
  kPatient = 0x70617469656e74ULL,
  kMeasurement = 0x6d656173ULL,
  kExploration = 0x6578706cULL,
  kWeightInit = 0x696e6974ULL,
  kReplay = 0x7265706cULL,
  kCohort = 0x636f686fULL,
};

std::uint64_t splitmix64(std::uint64_t x);

// Deterministic seed for (seed, index, tag); used for per-patient and
// per-epoch streams so results never depend on generation order.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index,
                          StreamTag tag);

Rng make_stream(std::uint64_t seed, std::uint64_t index, StreamTag tag);

// The distributions below are implemented here rather than taken from
// <random> so that streams are bit-identical across standard libraries.

// Uniform on [0, 1) with 53 random bits.
double uniform01(Rng& rng);

// Uniform integer in [0, n).
std::uint64_t uniform_index(Rng& rng, std::uint64_t n);

// Standard normal via Box-Muller (one pair per call, second value dropped).
double standard_normal(Rng& rng);

}  // namespace wdose
