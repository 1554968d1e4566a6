#pragma once

#include <cmath>
#include <cstdint>

namespace nudgeda {

// Counter-based pseudo-random generator (splitmix64 finalizer applied to a
// keyed counter). Stateless draws: the value of draw k from stream s under
// seed q is a pure function of (q, s, k), so observation noise is
// reproducible across platforms and runs, and independent streams can be
// split off by label without coordination.
class CounterRng {
  public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(mix(seed ^ mix(stream + 0x9e3779b97f4a7c15ull))) {}

    // Child generator for an independent named substream.
    CounterRng split(std::uint64_t label) const { return CounterRng(key_, label + 1); }

    // Uniform draw in (0, 1); counter selects the draw.
    double uniform(std::uint64_t counter) const {
        const std::uint64_t z = mix(key_ + counter * 0xbf58476d1ce4e5b9ull);
        // 53 mantissa bits, shifted into (0,1): never returns 0 or 1.
        return (static_cast<double>(z >> 11) + 0.5) * 0x1p-53;
    }

    // Standard normal draw via Box-Muller; draw `counter` is independent of
    // all other counters.
    double normal(std::uint64_t counter) const {
        const double u1 = uniform(2 * counter);
        const double u2 = uniform(2 * counter + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

  private:
    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
};

}  // namespace nudgeda
