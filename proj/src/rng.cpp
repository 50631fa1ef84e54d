#include "madiff/rng.hpp"

#include "madiff/errors.hpp"

#include <cmath>

namespace madiff {

uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

uint64_t seed_split(uint64_t root, std::string_view tag, uint64_t index) {
    uint64_t h = splitmix64(root ^ fnv1a64(tag));
    return splitmix64(h ^ (0x9e3779b97f4a7c15ULL * (index + 1)));
}

double Rng::uniform() {
    // 53 random bits into [0, 1)
    return double(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

double Rng::normal() {
    // Box-Muller; u1 nudged away from 0 so log() stays finite.
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

int Rng::uniform_int(int n) {
    if (n < 1) throw ParameterError("Rng::uniform_int: n must be >= 1");
    // modulo bias is ~n/2^64, irrelevant at the sizes used here
    return int(engine_() % uint64_t(n));
}

} // namespace madiff
