#pragma once

#include <cstdint>

namespace biokey {

// Project-wide deterministic PRNG. Every seeded draw in the toolkit
// (permutations, masks, channel noise, synthetic data) goes through
// SplitMix64 so that outputs are bit-exact across platforms and runs.
class SplitMix64 {
  public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform double in [0,1) with 53 bits of precision.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, bound). Modulo reduction; the bias is
    // negligible for the index ranges used here and keeps the draw
    // sequence trivially reproducible.
    std::uint64_t below(std::uint64_t bound) { return next() % bound; }

  private:
    std::uint64_t state_;
};

// Derivation rule for independent sub-streams (one per Monte Carlo frame,
// per trial, ...): mix the stream index into the base seed through one
// SplitMix64 step. Identical (seed, index) always yields the same stream,
// so parallel and serial runs agree bit-exactly.
inline SplitMix64 derive_stream(std::uint64_t base_seed, std::uint64_t index) {
    SplitMix64 mixer(index ^ 0xA5A5A5A55A5A5A5AULL);
    return SplitMix64(base_seed ^ mixer.next());
}

} // namespace biokey
