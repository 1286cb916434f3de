#include "defersim/rng.hpp"

#include <cmath>
#include <numbers>

namespace defersim {

double Rng::normal() {
    // Box-Muller, cosine branch only; u1 shifted away from zero.
    double u1 = (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;
    double u2 = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

int Rng::uniform_int(int lo, int hi) {
    uint64_t range = static_cast<uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(eng_() % range);
}

size_t Rng::sample_index(std::span<const double> weights) {
    double u = uniform01();
    double acc = 0.0;
    for (size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) return i;
    }
    return weights.size() - 1;  // guard against rounding shortfall
}

namespace {
uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

uint64_t fnv1a(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}
}  // namespace

uint64_t derive_seed(uint64_t base, std::string_view tag, uint64_t index) {
    uint64_t h = splitmix64(base ^ fnv1a(tag));
    return splitmix64(h ^ splitmix64(index));
}

}  // namespace defersim
