#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace madiff {

// splitmix64, the usual seed-spreading finalizer.
uint64_t splitmix64(uint64_t x);

// FNV-1a over the bytes of s; stable across platforms, used for seed
// derivation and config digests.
uint64_t fnv1a64(std::string_view s);

// Derives an independent stream seed from a root seed, a human-readable tag
// and an index. Every module draws its seed through this so one root seed
// pins the whole run.
uint64_t seed_split(uint64_t root, std::string_view tag, uint64_t index = 0);

// Thin deterministic RNG. Normals use Box-Muller on top of the engine's
// uniforms instead of std::normal_distribution, so the byte-for-byte output
// does not depend on the standard library's distribution internals.
class Rng {
  public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    // uniform in [0, 1)
    double uniform();
    // uniform in [lo, hi)
    double uniform(double lo, double hi);
    // standard normal
    double normal();
    // uniform integer in [0, n), n >= 1
    int uniform_int(int n);

  private:
    std::mt19937_64 engine_;
};

} // namespace madiff
