#pragma once

// Portable seeded random streams.
//
// Every consumer derives an independent stream from (seed, stream index) so
// that work items can be generated in any order, on any thread, and still
// reproduce the same values. The stream seed is
//     splitmix64(splitmix64(seed) ^ splitmix64(index + 0x9E3779B97F4A7C15))
// and feeds a std::mt19937_64, whose output sequence is fixed by the standard.
// Uniform doubles use the top 53 bits of each draw; std:: distributions are
// avoided because their algorithms differ between standard libraries.

#include <cstdint>
#include <random>

namespace roiexplain {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t stream)
        : engine_(splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x9E3779B97F4A7C15ULL))) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform in [0,1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform() < p; }

    /// Uniform integer in [0, n); n must be > 0.
    std::uint64_t below(std::uint64_t n) { return static_cast<std::uint64_t>(uniform() * n); }

private:
    std::mt19937_64 engine_;
};

}  // namespace roiexplain
