#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace defersim {

// Deterministic random stream. Raw bits come from mt19937_64; the floating
// point helpers are hand-rolled so draws do not depend on the standard
// library's unspecified distribution algorithms.
class Rng {
  public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    uint64_t raw() { return eng_(); }

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform01() < p; }

    // Standard normal via Box-Muller; consumes exactly two raw draws.
    double normal();

    // Uniform integer in [lo, hi] inclusive.
    int uniform_int(int lo, int hi);

    // Index sampled proportionally to `weights` (assumed nonnegative, total
    // mass ~1); consumes exactly one raw draw.
    size_t sample_index(std::span<const double> weights);

  private:
    std::mt19937_64 eng_;
};

// Stable sub-seed derivation: one global seed fans out into named streams
// ("data", "experts", "committee", ...) plus an index (expert number,
// repetition, ...). splitmix64 over the hashed tag keeps streams decorrelated.
uint64_t derive_seed(uint64_t base, std::string_view tag, uint64_t index = 0);

}  // namespace defersim
