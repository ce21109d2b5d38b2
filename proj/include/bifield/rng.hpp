// Splittable 64-bit random number generation.  The core generator advances
// its state by a fixed odd constant and scrambles the counter, so disjoint
// streams are obtained by remixing (seed, stream index) pairs; replicate
// streams never share state and the schedule of draws is deterministic.
#pragma once

#include <cmath>
#include <cstdint>

namespace bifield {

struct SplitMix64 {
    std::uint64_t state = 0;

    explicit SplitMix64(std::uint64_t seed = 0) : state(seed) {}

    std::uint64_t next() noexcept {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform double in [0, 1), 53 significant bits.
    double uniform() noexcept {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    // Exponential waiting time with the given rate (rate > 0).
    double exponential(double rate) noexcept {
        double u;
        do {
            u = uniform();
        } while (u <= 0.0);
        return -std::log(u) / rate;
    }

    // Uniform integer in [0, n), n >= 1.  Rejection-free multiply-shift is
    // fine here: n is tiny compared to 2^64, bias is below 2^-40.
    std::uint64_t below(std::uint64_t n) noexcept {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next()) * n) >> 64);
    }
};

// Scramble a (seed, stream) pair into an independent stream seed.  Two
// rounds of the output mix keep distinct replicate indices uncorrelated
// even for adjacent seeds.
inline std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    SplitMix64 g(seed);
    std::uint64_t a = g.next();
    SplitMix64 h(a ^ (stream * 0x9E3779B97F4A7C15ULL + 0x2545F4914F6CDD1DULL));
    h.next();
    return h.next();
}

}  // namespace bifield
